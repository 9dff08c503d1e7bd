#include "specbias/dynamics.hpp"

#include "specbias/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace specbias {
namespace {

constexpr int kOracleMaxDim = 64;

void check_sigma(const Vector& sigma)
{
    require(sigma.allFinite() && (sigma.array() >= 0.0).all(), "SpectralSystem: sigma must be finite and >= 0");
}

} // namespace

SpectralSystem::SpectralSystem(TrigBasis basis, Vector sigma, double eta)
    : trig_(std::move(basis)), sigma_(std::move(sigma)), eta_(eta)
{
    require(sigma_.size() == trig_->size(), "SpectralSystem: sigma length must equal n");
    require(std::isfinite(eta_) && eta_ >= 0.0, "SpectralSystem: eta must be finite and >= 0");
    check_sigma(sigma_);
}

SpectralSystem::SpectralSystem(Matrix basis, Vector sigma, double eta)
    : explicit_(std::move(basis)), sigma_(std::move(sigma)), eta_(eta)
{
    require(explicit_.rows() == explicit_.cols(), "SpectralSystem: basis must be square");
    require(sigma_.size() == explicit_.cols(), "SpectralSystem: sigma length must equal n");
    require(std::isfinite(eta_) && eta_ >= 0.0, "SpectralSystem: eta must be finite and >= 0");
    check_sigma(sigma_);
    const Matrix gram = explicit_.transpose() * explicit_;
    const double off = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    require(off <= 1e-10, "SpectralSystem: basis columns are not orthonormal");
}

SpectralSystem SpectralSystem::from_matrix(const Matrix& j, double eta)
{
    require(j.rows() > 0 && j.cols() > 0, "SpectralSystem::from_matrix: empty matrix");
    Eigen::JacobiSVD<Matrix> svd(j, Eigen::ComputeFullU);
    Vector sigma = Vector::Zero(j.rows());
    const Vector& s = svd.singularValues();
    sigma.head(s.size()) = s;
    return SpectralSystem(Matrix(svd.matrixU()), std::move(sigma), eta);
}

Vector SpectralSystem::analyze(const Vector& y) const
{
    require(y.size() == size(), "SpectralSystem::analyze: dimension mismatch");
    if (trig_) {
        return trig_->analyze(y);
    }
    return explicit_.transpose() * y;
}

Vector SpectralSystem::synthesize(const Vector& coefficients) const
{
    require(coefficients.size() == size(), "SpectralSystem::synthesize: dimension mismatch");
    if (trig_) {
        return trig_->synthesize(coefficients);
    }
    return explicit_ * coefficients;
}

Vector SpectralSystem::basis_vector(int index) const
{
    require(index >= 1 && index <= size(), "SpectralSystem::basis_vector: index out of range");
    if (trig_) {
        return trig_->vector(index);
    }
    return explicit_.col(index - 1);
}

Vector SpectralSystem::contraction(int tau) const
{
    Vector out(size());
    for (int i = 0; i < size(); ++i) {
        out[i] = contraction_factor(eta_ * sigma_[i] * sigma_[i], tau);
    }
    return out;
}

double contraction_factor(double x, int tau)
{
    require(tau >= 0, "contraction_factor: tau must be nonnegative");
    if (tau == 0) {
        return 1.0;
    }
    if (x >= 0.0 && x < 1.0) {
        return std::exp(static_cast<double>(tau) * std::log1p(-x));
    }
    return std::pow(1.0 - x, tau);
}

Vector linear_residual(const SpectralSystem& sys, const Vector& y, int tau)
{
    require(tau >= 0, "linear_residual: tau must be nonnegative");
    return sys.synthesize(sys.analyze(y).cwiseProduct(sys.contraction(tau)));
}

Vector linear_gd_iterate_oracle(const Matrix& j, const Vector& y, double eta, int tau)
{
    require(j.rows() <= kOracleMaxDim && j.cols() <= kOracleMaxDim,
            "linear_gd_iterate_oracle: dimensions above 64 are outside the oracle's scope");
    require(y.size() == j.rows(), "linear_gd_iterate_oracle: dimension mismatch");
    require(tau >= 0, "linear_gd_iterate_oracle: tau must be nonnegative");
    Vector c = Vector::Zero(j.cols());
    for (int t = 0; t < tau; ++t) {
        c -= eta * j.transpose() * (j * c - y);
    }
    return y - j * c;
}

double linear_gd_parameter_drift(const Matrix& j, const Vector& y, double eta, int tau)
{
    require(j.rows() <= kOracleMaxDim && j.cols() <= kOracleMaxDim,
            "linear_gd_parameter_drift: dimensions above 64 are outside the oracle's scope");
    require(y.size() == j.rows(), "linear_gd_parameter_drift: dimension mismatch");
    Vector c = Vector::Zero(j.cols());
    for (int t = 0; t < tau; ++t) {
        c -= eta * j.transpose() * (j * c - y);
    }
    return c.norm();
}

ErrorDecomposition error_decomposition(const SpectralSystem& sys, const Vector& x, const Vector& z, int p,
                                       int tau)
{
    const int n = sys.size();
    require(x.size() == n && z.size() == n, "error_decomposition: dimension mismatch");
    require(p >= 1 && p < n, "error_decomposition: need 1 <= p < n");
    const Vector cx = sys.analyze(x);
    const double x_norm = x.norm();
    require(cx.tail(n - p).norm() <= 1e-8 * x_norm, "error_decomposition: x is not in span{w_1..w_p}");

    const Vector factors = sys.contraction(tau);
    const Vector cz = sys.analyze(z);
    ErrorDecomposition out;
    out.signal_term = factors[p - 1] * x_norm;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double term = (factors[i] - 1.0) * cz[i];
        acc += term * term;
    }
    out.noise_term = std::sqrt(acc);
    out.total_bound = out.signal_term + out.noise_term;
    return out;
}

int stopping_time(int p, int n, double eta, double sigma_p_plus_1)
{
    require(n > 0 && p > 0 && p < n, "stopping_time: need 0 < p < n");
    const double x = eta * sigma_p_plus_1 * sigma_p_plus_1;
    require(std::isfinite(x), "stopping_time: eta * sigma^2 must be finite");
    if (x >= 1.0) {
        throw InvalidArgument("stopping_time: eta * sigma_{p+1}^2 >= 1 makes the contraction non-positive");
    }
    if (x < 1e-15) {
        throw InvalidArgument("stopping_time: eta * sigma_{p+1}^2 is too small; the stopping time diverges");
    }
    const double ratio = std::log1p(-std::sqrt(static_cast<double>(p) / n)) / std::log1p(-x);
    const double floored = std::floor(ratio * (1.0 + 1e-12));
    if (floored > static_cast<double>(std::numeric_limits<int>::max())) {
        throw NumericalError("stopping_time: stopping time overflows");
    }
    return std::max(1, static_cast<int>(floored));
}

double denoising_bound(double x_norm, int p, int n, double varsigma, double eta, double sigma_p, int tau,
                       double epsilon, double y_norm)
{
    require(p >= 0 && p < n, "denoising_bound: need 0 <= p < n");
    require(x_norm >= 0.0 && varsigma >= 0.0 && eta >= 0.0 && sigma_p >= 0.0 && tau >= 0 && epsilon >= 0.0 &&
                y_norm >= 0.0,
            "denoising_bound: inputs must be nonnegative");
    return contraction_factor(eta * sigma_p * sigma_p, tau) * x_norm +
           varsigma * std::sqrt(2.0 * p / static_cast<double>(n)) + epsilon * y_norm;
}

double param_drift(const SpectralSystem& sys, const Vector& r0_coefficients, int tau)
{
    require(r0_coefficients.size() == sys.size(), "param_drift: dimension mismatch");
    const Vector factors = sys.contraction(tau);
    double acc = 0.0;
    for (int i = 0; i < sys.size(); ++i) {
        const double c = r0_coefficients[i];
        if (c == 0.0) {
            continue;
        }
        const double s = sys.sigma()[i];
        if (s <= 1e-14) {
            throw InvalidArgument("param_drift: sigma_" + std::to_string(i + 1) +
                                  " vanishes while the residual has a component along it");
        }
        const double term = c * (1.0 - factors[i]) / s;
        acc += term * term;
    }
    return std::sqrt(acc);
}

double TheoryParams::residual_gap_bound() const
{
    return 2.0 * (inputs.beta / (inputs.alpha * inputs.alpha)) * (epsilon0 + epsilon) * inputs.r0_norm;
}

double max_admissible_iters(double xi, double alpha, double beta, double eta)
{
    return 32.0 * beta * beta / (eta * xi * xi * std::pow(alpha, 4));
}

TheoryParams theory_params(const TheoryInputs& in)
{
    require(in.n > 0 && in.k > 0, "theory_params: n and k must be positive");
    require(in.delta > 0.0 && in.delta < 1.0, "theory_params: delta must lie in (0, 1)");
    require(in.alpha > 0.0 && in.beta > 0.0, "theory_params: alpha and beta must be positive");
    require(in.alpha <= in.beta * (1.0 + 1e-12), "theory_params: alpha must not exceed beta");
    require(in.eta > 0.0, "theory_params: eta must be positive");
    const double log_term = std::log(2.0 * in.n / in.delta);
    const double xi_max = 1.0 / std::sqrt(32.0 * log_term);
    if (!(in.xi > 0.0 && in.xi <= xi_max)) {
        std::ostringstream os;
        os << "theory_params: xi must lie in (0, " << xi_max << "], got " << in.xi;
        throw InvalidArgument(os.str());
    }

    TheoryParams out;
    out.inputs = in;
    const double a = in.alpha;
    const double b = in.beta;
    out.epsilon0 = b * std::pow(4.0 * log_term / in.k, 0.25);
    out.epsilon = in.xi * a * a / (8.0 * b);
    out.omega = in.y_norm / (std::sqrt(static_cast<double>(in.n)) * b) * in.xi * a * a / (b * b);
    const double growth = 1.0 + in.xi / 4.0 * (a / b) * in.eta * in.max_iters * b * b;
    out.required_k = in.n * std::pow(in.xi, -8.0) * growth * growth * std::pow(b / a, 18.0);
    out.required_k_constant_unspecified = true;
    out.radius = 2.0 * in.r0_norm / a +
                 (2.0 / (a * a)) * (out.epsilon0 + out.epsilon) * (1.0 + 2.0 * in.eta * in.max_iters * b * b) *
                     in.r0_norm;

    if (in.eta > 1.0 / (b * b) * (1.0 + 1e-12)) {
        out.flags.push_back("eta exceeds 1/beta^2");
    }
    const double t_max = max_admissible_iters(in.xi, a, b, in.eta);
    if (in.max_iters < 1 || in.max_iters > t_max) {
        std::ostringstream os;
        os << "T = " << in.max_iters << " outside the admissible range [1, " << t_max << "]";
        out.flags.push_back(os.str());
    }
    if (in.k < out.required_k) {
        out.flags.push_back("k below the channel condition (absolute constant taken as 1)");
    }
    out.flags.push_back("required_k is stated up to an unspecified absolute constant");
    return out;
}

double LinearizationGap::max_gap() const
{
    double best = 0.0;
    for (double g : gap) {
        best = std::max(best, g);
    }
    return best;
}

LinearizationGap linearization_gap(const FitTrace& trace, const SpectralSystem& sys, const Vector& r0,
                                   const std::optional<TheoryParams>& theory)
{
    require(trace.has_coefficients(), "linearization_gap: the trace carries no coefficient vectors");
    require(r0.size() == sys.size(), "linearization_gap: r0 has the wrong length");
    const Vector c0 = sys.analyze(r0);
    LinearizationGap out;
    out.bound = theory ? theory->residual_gap_bound() : std::numeric_limits<double>::quiet_NaN();
    for (const auto& rec : trace.records) {
        require(rec.coefficients.size() == sys.size(), "linearization_gap: coefficient length mismatch");
        const Vector predicted = c0.cwiseProduct(sys.contraction(rec.iter));
        out.iters.push_back(rec.iter);
        out.predicted_residual.push_back(predicted.norm());
        out.observed_residual.push_back(rec.residual_norm);
        out.gap.push_back((rec.coefficients - predicted).norm());
    }
    return out;
}

std::string linearization_gap_csv(const LinearizationGap& gap)
{
    std::ostringstream os;
    os.precision(17);
    os << "iter,predicted_residual,observed_residual,gap,bound\n";
    for (std::size_t t = 0; t < gap.iters.size(); ++t) {
        os << gap.iters[t] << ',' << gap.predicted_residual[t] << ',' << gap.observed_residual[t] << ','
           << gap.gap[t] << ',';
        if (!std::isnan(gap.bound)) {
            os << gap.bound;
        }
        os << '\n';
    }
    return os.str();
}

FitTrace linear_fit_trace(const Matrix& j, const Vector& y, const SpectralSystem& sys, int iterations)
{
    require(j.rows() == y.size() && y.size() == sys.size(), "linear_fit_trace: dimension mismatch");
    require(iterations >= 0, "linear_fit_trace: iterations must be nonnegative");
    FitTrace trace;
    Vector c = Vector::Zero(j.cols());
    for (int t = 0;; ++t) {
        const Vector residual = y - j * c;
        FitRecord rec;
        rec.iter = t;
        rec.residual_norm = residual.norm();
        rec.loss = 0.5 * rec.residual_norm * rec.residual_norm;
        rec.weight_drift = c.norm();
        rec.coefficients = sys.analyze(residual);
        trace.records.push_back(std::move(rec));
        if (t >= iterations) {
            break;
        }
        c += sys.eta() * j.transpose() * residual;
    }
    trace.stop_iter = iterations;
    return trace;
}

} // namespace specbias
