#include "specbias/jacobian_lab.hpp"

#include "specbias/errors.hpp"
#include "specbias/fft.hpp"
#include "specbias/linalg.hpp"
#include "specbias/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace specbias {
namespace {

// The angle comes from the chord between the unit rows, which keeps full
// relative accuracy for nearly parallel rows where arccos would not.
double arc_cosine_entry(double inner, double chord)
{
    const double angle = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    return 0.5 * (1.0 - angle / std::numbers::pi) * inner;
}

Matrix activation_pattern(const GeneratorState& state)
{
    const RowMatrix pre = preactivations(state);
    return (pre.array() > 0.0).cast<double>().matrix();
}

Matrix row_gram(const CirculantOperator& op)
{
    const Matrix u = op.dense();
    return u * u.transpose();
}

} // namespace

SigmaMatrix sigma_closed_form(const Matrix& u)
{
    require(u.rows() == u.cols(), "sigma_closed_form: U must be square");
    const Matrix inner = u * u.transpose();
    const Vector norms = u.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        require(norms[i] > 0.0, "sigma_closed_form: U has a zero row");
    }
    const Matrix unit = norms.cwiseInverse().asDiagonal() * u;
    SigmaMatrix out;
    out.values.resize(u.rows(), u.rows());
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            out.values(i, j) = arc_cosine_entry(inner(i, j), (unit.row(i) - unit.row(j)).norm());
        }
    }
    return out;
}

SigmaMatrix sigma_closed_form(const CirculantOperator& op)
{
    // Row i of U is row 0 shifted by i, so (i, j) depends only on (i - j) mod n.
    const Matrix u = op.dense();
    const Eigen::Index n = u.rows();
    const Vector row0 = u.row(0).transpose();
    const double norm = row0.norm();
    require(norm > 0.0, "sigma_closed_form: U has a zero row");
    Vector first(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        const Vector row = u.row(l).transpose();
        first[l] = arc_cosine_entry(row.dot(row0), (row - row0).norm() / norm);
    }
    SigmaMatrix out;
    out.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.values(i, j) = first[(i - j + n) % n];
        }
    }
    return out;
}

bool is_circulant(const Matrix& s, double tolerance)
{
    if (s.rows() != s.cols()) {
        return false;
    }
    const Eigen::Index n = s.rows();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(s(i, j) - s((i - j + n) % n, 0)) > tolerance * scale) {
                return false;
            }
        }
    }
    return true;
}

Vector circulant_trig_eigenvalues(const Matrix& s)
{
    const Eigen::Index n = s.rows();
    const Vector first = s.col(0);
    const auto spec = fft::forward_real({first.data(), static_cast<std::size_t>(n)});
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = spec[static_cast<std::size_t>(i)].real();
    }
    return out;
}

EigenSystem sigma_eigensystem(const SigmaMatrix& s, bool force_dense)
{
    const Matrix& m = s.values;
    require(m.rows() == m.cols(), "sigma_eigensystem: matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "sigma_eigensystem: matrix is not symmetric");

    EigenSystem out;
    const int n = static_cast<int>(m.rows());
    if (!force_dense && n % 2 == 0 && is_circulant(m)) {
        const Vector lambda = circulant_trig_eigenvalues(m);
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 1);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambda[a - 1] > lambda[b - 1]; });
        const TrigBasis basis(n);
        out.values.resize(n);
        out.vectors.resize(n, n);
        for (int r = 0; r < n; ++r) {
            out.values[r] = lambda[order[static_cast<std::size_t>(r)] - 1];
            out.vectors.col(r) = basis.vector(order[static_cast<std::size_t>(r)]);
        }
        out.trig_index = std::move(order);
        out.fast_path = true;
        return out;
    }
    const SymmetricEigen eig = symmetric_eigen_descending(m);
    out.values = eig.values;
    out.vectors = eig.vectors;
    return out;
}

Matrix dense_jacobian(const GeneratorState& state, double budget)
{
    const int n = state.n();
    const int k = state.k();
    if (static_cast<double>(n) * k > budget) {
        throw BudgetExceeded("dense_jacobian: n k = " + std::to_string(static_cast<long>(n) * k) +
                             " exceeds the dense budget");
    }
    const Matrix u = state.op->dense();
    const Matrix pattern = activation_pattern(state);
    Matrix jac = Matrix::Zero(n, static_cast<Eigen::Index>(n) * k);
    for (int l = 0; l < k; ++l) {
        for (int i = 0; i < n; ++i) {
            if (pattern(i, l) > 0.0) {
                jac.block(i, static_cast<Eigen::Index>(l) * n, 1, n) = state.signs[l] * u.row(i);
            }
        }
    }
    return jac;
}

Matrix jacobian_gram(const GeneratorState& state)
{
    const Matrix pattern = activation_pattern(state);
    const Matrix weighted = pattern * state.signs.cwiseAbs2().asDiagonal();
    const Matrix coactive = weighted * pattern.transpose();
    return coactive.cwiseProduct(row_gram(*state.op));
}

Matrix jacobian_difference_gram(const GeneratorState& a, const GeneratorState& b)
{
    require(a.n() == b.n() && a.k() == b.k(), "jacobian_difference_gram: shapes differ");
    const Matrix diff = activation_pattern(a) - activation_pattern(b);
    const Matrix weighted = diff * a.signs.cwiseAbs2().asDiagonal();
    return (weighted * diff.transpose()).cwiseProduct(row_gram(*a.op));
}

SigmaMatrix mc_expected_jjt(const GeneratorConfig& cfg, int trials)
{
    require(trials >= 1, "mc_expected_jjt: trials must be positive");
    cfg.validate();
    std::vector<Matrix> grams(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int t) {
        GeneratorConfig trial = cfg;
        trial.seed = cfg.seed + static_cast<std::uint64_t>(t);
        grams[static_cast<std::size_t>(t)] = jacobian_gram(init_generator(trial));
    });
    SigmaMatrix out;
    out.values = Matrix::Zero(cfg.n, cfg.n);
    for (const auto& g : grams) {
        out.values += g;
    }
    out.values /= trials;
    out.provenance = SigmaMatrix::Provenance::MonteCarlo;
    out.trials = trials;
    out.seed = cfg.seed;
    return out;
}

ConcentrationGap concentration_gap(const GeneratorState& state, const SigmaMatrix& sigma, double delta)
{
    require(delta > 0.0 && delta < 1.0, "concentration_gap: delta must lie in (0, 1)");
    require(sigma.values.rows() == state.n(), "concentration_gap: Sigma has the wrong size");
    ConcentrationGap out;
    out.gap = symmetric_operator_norm(jacobian_gram(state) - sigma.values);
    const double beta = operator_norm(*state.op);
    const double v4 = state.signs.array().pow(4).sum();
    out.bound = beta * beta * std::sqrt(std::log(2.0 * state.n() / delta) * v4);
    return out;
}

ConcentrationGap concentration_gap(const GeneratorState& state, double delta)
{
    return concentration_gap(state, sigma_closed_form(*state.op), delta);
}

double InitialOutputCheck::fraction() const
{
    return output_norms.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(output_norms.size());
}

InitialOutputCheck initial_output_check(const GeneratorConfig& cfg, int trials, double delta)
{
    require(trials >= 1, "initial_output_check: trials must be positive");
    require(delta > 0.0 && delta < 1.0, "initial_output_check: delta must lie in (0, 1)");
    cfg.validate();
    InitialOutputCheck out;
    const CirculantOperator op(cfg.kernel);
    out.bound = cfg.omega * std::sqrt(8.0 * std::log(2.0 * cfg.n / delta)) * op.frobenius_norm();
    out.output_norms.resize(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int t) {
        GeneratorConfig trial = cfg;
        trial.seed = cfg.seed + static_cast<std::uint64_t>(t);
        out.output_norms[static_cast<std::size_t>(t)] = forward(init_generator(trial)).norm();
    });
    out.passed = static_cast<int>(
        std::count_if(out.output_norms.begin(), out.output_norms.end(), [&](double v) { return v <= out.bound; }));
    return out;
}

double perturbation_gap(const GeneratorState& a, const GeneratorState& b)
{
    const double top = symmetric_operator_norm(jacobian_difference_gram(a, b));
    return std::sqrt(std::max(0.0, top));
}

double perturbation_rate_bound(int k, double relative_radius, double u_norm)
{
    require(k > 0 && relative_radius >= 0.0, "perturbation_rate_bound: invalid arguments");
    return 2.0 * std::cbrt(k * relative_radius) * u_norm / std::sqrt(static_cast<double>(k));
}

double alignment(const GeneratorState& state, const Vector& y)
{
    require(y.size() == state.n(), "alignment: dimension mismatch");
    return jacobian_transpose_apply(state, preactivations(state), y).norm();
}

double alignment(const DecoderState& state, const Vector& y)
{
    require(y.size() == state.config.n_out, "alignment: dimension mismatch");
    const DecoderCache cache = decoder_forward_cached(state);
    return flatten(decoder_backward(state, cache, y)).norm();
}

double predicted_alignment(const Vector& sigma, const Vector& y)
{
    require(sigma.size() == y.size(), "predicted_alignment: dimension mismatch");
    const Vector c = TrigBasis(static_cast<int>(y.size())).analyze(y);
    return c.cwiseProduct(sigma).norm();
}

SpectrumSnapshot spectrum_from_gram(const Matrix& gram, int top_s, int iter)
{
    const int n = static_cast<int>(gram.rows());
    require(top_s >= 1 && top_s <= n, "spectrum_from_gram: top_s out of range");
    const SymmetricEigen eig = symmetric_eigen_descending(0.5 * (gram + gram.transpose()));
    SpectrumSnapshot snap;
    snap.iter = iter;
    snap.singular_values = eig.values.cwiseMax(0.0).cwiseSqrt();
    snap.vectors = eig.vectors.leftCols(top_s);
    const TrigBasis basis(n);
    for (int r = 0; r < top_s; ++r) {
        const Vector c = basis.analyze(snap.vectors.col(r)).cwiseAbs();
        Eigen::Index best = 0;
        const double corr = c.maxCoeff(&best);
        snap.best_trig_index.push_back(static_cast<int>(best) + 1);
        snap.correlation.push_back(corr);
    }
    return snap;
}

SpectrumSnapshot spectrum_from_jacobian(const Matrix& jacobian, int top_s, int iter)
{
    return spectrum_from_gram(jacobian * jacobian.transpose(), top_s, iter);
}

std::vector<SpectrumSnapshot> svd_track(const std::vector<GeneratorState>& states, const std::vector<int>& iters,
                                        int top_s)
{
    require(states.size() == iters.size(), "svd_track: one iteration label per state");
    std::vector<SpectrumSnapshot> out;
    for (std::size_t c = 0; c < states.size(); ++c) {
        out.push_back(spectrum_from_gram(jacobian_gram(states[c]), top_s, iters[c]));
    }
    return out;
}

std::vector<SpectrumSnapshot> svd_track(const std::vector<DecoderState>& states, const std::vector<int>& iters,
                                        int top_s)
{
    require(states.size() == iters.size(), "svd_track: one iteration label per state");
    std::vector<SpectrumSnapshot> out;
    for (std::size_t c = 0; c < states.size(); ++c) {
        out.push_back(spectrum_from_jacobian(decoder_jacobian(states[c]), top_s, iters[c]));
    }
    return out;
}

std::vector<double> snapshot_correlations(const SpectrumSnapshot& a, const SpectrumSnapshot& b)
{
    require(a.vectors.rows() == b.vectors.rows(), "snapshot_correlations: dimension mismatch");
    const Eigen::Index s = std::min(a.vectors.cols(), b.vectors.cols());
    std::vector<double> out;
    for (Eigen::Index r = 0; r < s; ++r) {
        out.push_back(std::abs(a.vectors.col(r).dot(b.vectors.col(r))));
    }
    return out;
}

std::string snapshot_csv(const SpectrumSnapshot& snapshot)
{
    std::ostringstream os;
    os.precision(17);
    os << "rank,singular_value,best_trig_index,correlation\n";
    for (std::size_t r = 0; r < snapshot.correlation.size(); ++r) {
        os << r + 1 << ',' << snapshot.singular_values[static_cast<Eigen::Index>(r)] << ','
           << snapshot.best_trig_index[r] << ',' << snapshot.correlation[r] << '\n';
    }
    return os.str();
}

std::string matrix_csv(const Matrix& m)
{
    std::ostringstream os;
    os.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << m(i, j);
        }
        os << '\n';
    }
    return os.str();
}

} // namespace specbias
