#include "specbias/generator.hpp"

#include "specbias/dynamics.hpp"
#include "specbias/errors.hpp"
#include "specbias/linalg.hpp"

#include <cmath>
#include <sstream>

namespace specbias {

void GeneratorConfig::validate() const
{
    require(n > 0 && n % 2 == 0, "generator: n must be a positive even integer");
    require(k >= 2 && k % 2 == 0, "generator: k must be an even integer >= 2");
    require(kernel.size() == n, "generator: kernel length must equal n");
    require(std::isfinite(omega) && omega > 0.0, "generator: omega must be finite and positive");
}

double default_omega(double y_norm, int n, double beta)
{
    require(n > 0 && beta > 0.0, "default_omega: n and beta must be positive");
    return y_norm / (std::sqrt(static_cast<double>(n)) * beta);
}

Vector balanced_signs(int k)
{
    require(k >= 2 && k % 2 == 0, "balanced_signs: k must be an even integer >= 2");
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    Vector v(k);
    v.head(k / 2).setConstant(s);
    v.tail(k / 2).setConstant(-s);
    return v;
}

GeneratorState init_generator(const GeneratorConfig& cfg)
{
    cfg.validate();
    NormalSource normals(cfg.seed);
    GeneratorState state;
    state.weights = normals.matrix(cfg.n, cfg.k, cfg.omega);
    state.signs = balanced_signs(cfg.k);
    state.op = std::make_shared<const CirculantOperator>(cfg.kernel);
    return state;
}

GeneratorState make_state(std::shared_ptr<const CirculantOperator> op, RowMatrix weights)
{
    require(op != nullptr, "make_state: missing operator");
    require(weights.rows() == op->size(), "make_state: weight rows must equal n");
    GeneratorState state;
    state.signs = balanced_signs(static_cast<int>(weights.cols()));
    state.weights = std::move(weights);
    state.op = std::move(op);
    return state;
}

RowMatrix preactivations(const GeneratorState& state)
{
    return state.op->apply(state.weights);
}

namespace {

Vector forward_from(const RowMatrix& pre, const Vector& signs)
{
    return pre.cwiseMax(0.0) * signs;
}

void check_target(const GeneratorState& state, const Vector& y, const char* what)
{
    if (y.size() != state.n()) {
        throw InvalidArgument(std::string(what) + ": target has length " + std::to_string(y.size()) +
                              ", expected " + std::to_string(state.n()));
    }
}

} // namespace

Vector forward(const GeneratorState& state)
{
    if (!state.weights.allFinite()) {
        throw NumericalError("forward: weights are not finite");
    }
    return forward_from(preactivations(state), state.signs);
}

double loss(const GeneratorState& state, const Vector& y)
{
    check_target(state, y, "loss");
    return 0.5 * (y - forward(state)).squaredNorm();
}

namespace {

void masked_residual(const GeneratorState& state, const RowMatrix& pre, const Vector& r, RowMatrix& d)
{
    d.resize(pre.rows(), pre.cols());
    const double* v = state.signs.data();
    for (Eigen::Index i = 0; i < pre.rows(); ++i) {
        const double* p = pre.row(i).data();
        double* out = d.row(i).data();
        const double ri = r[i];
        for (Eigen::Index l = 0; l < pre.cols(); ++l) {
            out[l] = p[l] > 0.0 ? ri * v[l] : 0.0;
        }
    }
}

} // namespace

RowMatrix jacobian_transpose_apply(const GeneratorState& state, const RowMatrix& pre, const Vector& r)
{
    require(r.size() == state.n(), "jacobian_transpose_apply: vector length must equal n");
    RowMatrix d;
    masked_residual(state, pre, r, d);
    return state.op->apply_transpose(d);
}

RowMatrix gradient(const GeneratorState& state, const Vector& y)
{
    check_target(state, y, "gradient");
    const RowMatrix pre = preactivations(state);
    return jacobian_transpose_apply(state, pre, forward_from(pre, state.signs) - y);
}

GeneratorFit fit(const GeneratorState& start, const Vector& y, const GDConfig& gd, const StoppingRule& stop,
                 const std::optional<Vector>& truth)
{
    check_target(start, y, "fit");
    require(std::isfinite(gd.eta) && gd.eta >= 0.0, "fit: eta must be finite and nonnegative");
    require(gd.max_iters >= 0, "fit: max_iters must be nonnegative");
    if (truth) {
        check_target(start, *truth, "fit (truth)");
    }

    FitTrace trace;
    const double beta = operator_norm(*start.op);
    if (gd.eta > 1.0 / (beta * beta)) {
        std::ostringstream os;
        os << "step size " << gd.eta << " exceeds 1/||U||^2 = " << 1.0 / (beta * beta);
        trace.diagnostics.push_back(os.str());
    }

    int horizon = gd.max_iters;
    switch (stop.kind) {
    case StoppingRule::Kind::Fixed:
        require(stop.iterations >= 0, "fit: fixed stopping needs a nonnegative iteration count");
        horizon = stop.iterations;
        break;
    case StoppingRule::Kind::Theory: {
        const int n = start.n();
        require(stop.p > 0 && stop.p < n, "fit: theory stopping needs 0 < p < n");
        const DualKernel dual = dual_kernel(start.op->kernel());
        const double sigma = dual.sigma[stop.p];
        if (!(sigma > 0.0)) {
            throw InvalidArgument("fit: theory stopping needs sigma_{p+1} > 0");
        }
        const int tau = stopping_time(stop.p, n, gd.eta, sigma);
        if (tau > gd.max_iters) {
            trace.diagnostics.push_back("theory stopping time " + std::to_string(tau) + " capped at max_iters " +
                                        std::to_string(gd.max_iters));
            horizon = gd.max_iters;
        } else {
            horizon = tau;
        }
        break;
    }
    case StoppingRule::Kind::OracleBest:
        require(truth.has_value(), "fit: the oracle stopping rule needs the ground truth");
        break;
    case StoppingRule::Kind::LossThreshold:
        break;
    }

    const std::optional<TrigBasis> basis =
        gd.record_spectrum ? std::optional<TrigBasis>(TrigBasis(start.n())) : std::nullopt;

    GeneratorState state = start;
    GeneratorState best = start;
    double best_error = std::numeric_limits<double>::infinity();
    trace.stop_iter = horizon;

    RowMatrix pre;
    RowMatrix masked;
    RowMatrix step;
    for (int tau = 0;; ++tau) {
        if (!state.weights.allFinite()) {
            throw NumericalError("fit: weights diverged at iteration " + std::to_string(tau));
        }
        state.op->apply(state.weights, pre);
        const Vector out = forward_from(pre, state.signs);
        const Vector residual = y - out;

        FitRecord rec;
        rec.iter = tau;
        rec.residual_norm = residual.norm();
        rec.loss = 0.5 * rec.residual_norm * rec.residual_norm;
        rec.weight_drift = (state.weights - start.weights).norm();
        if (truth) {
            rec.error_to_truth = (*truth - out).norm();
        }
        if (basis) {
            rec.coefficients = basis->analyze(residual);
        }
        trace.records.push_back(std::move(rec));
        const FitRecord& last = trace.records.back();

        if (stop.kind == StoppingRule::Kind::OracleBest && last.error_to_truth < best_error) {
            best_error = last.error_to_truth;
            best = state;
            trace.stop_iter = tau;
        }
        if (stop.kind == StoppingRule::Kind::LossThreshold && last.loss <= stop.loss_threshold) {
            trace.stop_iter = tau;
            break;
        }
        if (tau >= horizon) {
            break;
        }
        masked_residual(state, pre, residual, masked);
        state.op->apply_transpose(masked, step);
        state.weights += gd.eta * step;
    }

    GeneratorFit result{std::move(trace), stop.kind == StoppingRule::Kind::OracleBest ? best : state};
    return result;
}

} // namespace specbias
