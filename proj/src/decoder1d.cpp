#include "specbias/decoder1d.hpp"

#include "specbias/errors.hpp"
#include "specbias/linalg.hpp"

#include <cmath>
#include <limits>

namespace specbias {
namespace {

int wrap(long i, long n)
{
    const long r = i % n;
    return static_cast<int>(r < 0 ? r + n : r);
}

// S_s(X) row j = X row (j - s).
Matrix shift_rows(const Matrix& x, int s)
{
    const int n = static_cast<int>(x.rows());
    Matrix out(x.rows(), x.cols());
    for (int j = 0; j < n; ++j) {
        out.row(j) = x.row(wrap(j - s, n));
    }
    return out;
}

Matrix activate(const Matrix& a, Activation act)
{
    return act == Activation::Relu ? Matrix(a.cwiseMax(0.0)) : a;
}

Matrix activation_backward(const Matrix& g, const Matrix& a, Activation act)
{
    if (act == Activation::Identity) {
        return g;
    }
    return g.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
}

} // namespace

std::string to_string(DecoderVariant variant)
{
    switch (variant) {
    case DecoderVariant::BilinearUpsample:
        return "bilinear-upsample";
    case DecoderVariant::FixedKernel:
        return "fixed-kernel-no-upsample";
    case DecoderVariant::LearnedConv:
        return "learned-conv";
    case DecoderVariant::LearnedDeconv:
        return "learned-deconv";
    }
    return "bilinear-upsample";
}

DecoderVariant decoder_variant_from_string(const std::string& name)
{
    for (auto v : {DecoderVariant::BilinearUpsample, DecoderVariant::FixedKernel, DecoderVariant::LearnedConv,
                   DecoderVariant::LearnedDeconv}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    throw InvalidArgument("unknown decoder variant '" + name + "'");
}

void DecoderConfig::validate() const
{
    require(d >= 1, "decoder: d must be at least 1");
    require(k >= 1, "decoder: k must be positive");
    require(n_out >= 2 && n_out % 2 == 0, "decoder: n_out must be a positive even integer");
    if (upsamples()) {
        require(d < 31 && n_out % (1 << d) == 0, "decoder: n_out must be divisible by 2^d for upsampling variants");
    }
    if (learned()) {
        require(filter_width >= 1 && filter_width % 2 == 1, "decoder: filter_width must be a positive odd integer");
        require(filter_width <= input_length(), "decoder: filter_width exceeds the input length");
    }
    if (omega) {
        require(std::isfinite(*omega) && *omega > 0.0, "decoder: omega must be finite and positive");
    }
    if (output_scale) {
        require(std::isfinite(*output_scale) && *output_scale > 0.0,
                "decoder: output_scale must be finite and positive");
    }
}

bool DecoderConfig::upsamples() const
{
    return variant == DecoderVariant::BilinearUpsample || variant == DecoderVariant::LearnedDeconv;
}

bool DecoderConfig::learned() const
{
    return variant == DecoderVariant::LearnedConv || variant == DecoderVariant::LearnedDeconv;
}

int DecoderConfig::input_length() const
{
    return upsamples() ? n_out >> d : n_out;
}

double DecoderConfig::resolved_omega() const
{
    if (omega) {
        return *omega;
    }
    return learned() ? 1.0 / std::sqrt(static_cast<double>(k) * filter_width) : 1.0 / std::sqrt(static_cast<double>(k));
}

double DecoderConfig::resolved_output_scale() const
{
    return output_scale ? *output_scale : 0.1 / std::sqrt(static_cast<double>(k));
}

long layer_parameter_count(const DecoderConfig& cfg)
{
    return static_cast<long>(cfg.d) * cfg.taps() * cfg.k * cfg.k;
}

long parameter_count(const DecoderConfig& cfg)
{
    return layer_parameter_count(cfg) + cfg.k;
}

DecoderState init_decoder(const DecoderConfig& cfg)
{
    cfg.validate();
    NormalSource normals(cfg.seed);
    DecoderState state;
    state.config = cfg;
    const int n0 = cfg.input_length();
    state.input = Matrix(n0, cfg.k);
    for (int c = 0; c < cfg.k; ++c) {
        for (int j = 0; j < n0; ++j) {
            state.input(j, c) = normals();
        }
    }
    const double omega = cfg.resolved_omega();
    for (int i = 0; i < cfg.d; ++i) {
        Matrix w(cfg.taps() * cfg.k, cfg.k);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = omega * normals();
            }
        }
        state.layers.push_back(std::move(w));
    }
    state.output = normals.vector(cfg.k, cfg.resolved_output_scale());
    return state;
}

Matrix channel_normalize(const Matrix& z, Vector* mean, Vector* std_dev)
{
    const double n = static_cast<double>(z.rows());
    Matrix out(z.rows(), z.cols());
    Vector mu(z.cols());
    Vector sd(z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        mu[c] = z.col(c).mean();
        const auto centered = z.col(c).array() - mu[c];
        sd[c] = std::sqrt(centered.square().sum() / n);
        out.col(c) = (centered / (sd[c] + kChannelNormEps)).matrix();
    }
    if (mean) {
        *mean = std::move(mu);
    }
    if (std_dev) {
        *std_dev = std::move(sd);
    }
    return out;
}

Matrix channel_normalize_backward(const Matrix& grad, const Matrix& z, const Vector& mean, const Vector& std_dev,
                                  NormDerivative mode)
{
    const double n = static_cast<double>(z.rows());
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double s = std_dev[c];
        const double denom = s + kChannelNormEps;
        const Vector g = grad.col(c);
        Vector col = (g.array() - g.mean()).matrix() / denom;
        if (mode == NormDerivative::Full && s > 0.0) {
            const Vector centered = (z.col(c).array() - mean[c]).matrix();
            col -= g.dot(centered) / (denom * denom * n * s) * centered;
        }
        out.col(c) = col;
    }
    return out;
}

Matrix zero_insert_upsample(const Matrix& x)
{
    Matrix out = Matrix::Zero(2 * x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        out.row(2 * j) = x.row(j);
    }
    return out;
}

Matrix interpolate(const Matrix& x)
{
    const int n = static_cast<int>(x.rows());
    Matrix out(x.rows(), x.cols());
    for (int j = 0; j < n; ++j) {
        out.row(j) = x.row(j) + 0.5 * (x.row(wrap(j - 1, n)) + x.row(wrap(j + 1, n)));
    }
    return out;
}

Matrix interpolate_transpose(const Matrix& x)
{
    // The taps are symmetric, so the operator is its own transpose.
    return interpolate(x);
}

DecoderCache decoder_forward_cached(const DecoderState& state)
{
    const DecoderConfig& cfg = state.config;
    require(static_cast<int>(state.layers.size()) == cfg.d, "decoder_forward: layer count mismatch");
    require(state.output.size() == cfg.k, "decoder_forward: output weights have the wrong length");
    const int half = (cfg.taps() - 1) / 2;

    DecoderCache cache;
    Matrix b = state.input;
    for (int i = 0; i < cfg.d; ++i) {
        const Matrix& w = state.layers[static_cast<std::size_t>(i)];
        require(w.rows() == cfg.taps() * cfg.k && w.cols() == cfg.k, "decoder_forward: layer shape mismatch");
        Matrix x = cfg.upsamples() ? zero_insert_upsample(b) : b;
        Matrix a;
        if (cfg.learned()) {
            a = Matrix::Zero(x.rows(), cfg.k);
            for (int t = 0; t < cfg.taps(); ++t) {
                a += shift_rows(x, t - half) * w.middleRows(static_cast<Eigen::Index>(t) * cfg.k, cfg.k);
            }
        } else {
            a = interpolate(x * w);
        }
        Matrix z = activate(a, cfg.activation);
        Vector mu;
        Vector sd;
        b = channel_normalize(z, &mu, &sd);
        cache.inputs.push_back(std::move(x));
        cache.pre.push_back(std::move(a));
        cache.post.push_back(std::move(z));
        cache.mean.push_back(std::move(mu));
        cache.std_dev.push_back(std::move(sd));
        cache.normalized.push_back(b);
    }
    cache.out = b * state.output;
    if (!cache.out.allFinite()) {
        throw NumericalError("decoder_forward: output is not finite");
    }
    return cache;
}

Vector decoder_forward(const DecoderState& state)
{
    return decoder_forward_cached(state).out;
}

DecoderGradient decoder_backward(const DecoderState& state, const DecoderCache& cache, const Vector& g,
                                 NormDerivative mode)
{
    const DecoderConfig& cfg = state.config;
    require(g.size() == cache.out.size(), "decoder_backward: cotangent has the wrong length");
    const int half = (cfg.taps() - 1) / 2;

    DecoderGradient grad;
    grad.layers.resize(static_cast<std::size_t>(cfg.d));
    grad.output = cache.normalized.back().transpose() * g;
    Matrix gb = g * state.output.transpose();
    for (int i = cfg.d - 1; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        const Matrix gz = channel_normalize_backward(gb, cache.post[idx], cache.mean[idx], cache.std_dev[idx], mode);
        const Matrix ga = activation_backward(gz, cache.pre[idx], cfg.activation);
        const Matrix& x = cache.inputs[idx];
        const Matrix& w = state.layers[idx];
        Matrix gx;
        Matrix gw(w.rows(), w.cols());
        if (cfg.learned()) {
            gx = Matrix::Zero(x.rows(), x.cols());
            for (int t = 0; t < cfg.taps(); ++t) {
                const auto block = w.middleRows(static_cast<Eigen::Index>(t) * cfg.k, cfg.k);
                gw.middleRows(static_cast<Eigen::Index>(t) * cfg.k, cfg.k) =
                    shift_rows(x, t - half).transpose() * ga;
                gx += shift_rows(ga * block.transpose(), half - t);
            }
        } else {
            const Matrix gm = interpolate_transpose(ga);
            gw = x.transpose() * gm;
            gx = gm * w.transpose();
        }
        grad.layers[idx] = std::move(gw);
        if (i == 0) {
            break;
        }
        if (cfg.upsamples()) {
            Matrix down(gx.rows() / 2, gx.cols());
            for (Eigen::Index j = 0; j < down.rows(); ++j) {
                down.row(j) = gx.row(2 * j);
            }
            gb = std::move(down);
        } else {
            gb = std::move(gx);
        }
    }
    return grad;
}

DecoderGradient decoder_gradient(const DecoderState& state, const Vector& y, NormDerivative mode)
{
    require(y.size() == state.config.n_out, "decoder_gradient: target has the wrong length");
    const DecoderCache cache = decoder_forward_cached(state);
    return decoder_backward(state, cache, cache.out - y, mode);
}

Vector flatten(const DecoderGradient& g)
{
    Eigen::Index total = g.output.size();
    for (const auto& m : g.layers) {
        total += m.size();
    }
    Vector flat(total);
    Eigen::Index pos = 0;
    for (const auto& m : g.layers) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                flat[pos++] = m(r, c);
            }
        }
    }
    flat.segment(pos, g.output.size()) = g.output;
    return flat;
}

Vector flatten_parameters(const DecoderState& state)
{
    return flatten(DecoderGradient{state.layers, state.output});
}

void set_parameters(DecoderState& state, const Vector& flat)
{
    require(flat.size() == parameter_count(state.config), "set_parameters: wrong parameter count");
    Eigen::Index pos = 0;
    for (auto& m : state.layers) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = flat[pos++];
            }
        }
    }
    state.output = flat.segment(pos, state.output.size());
}

Matrix decoder_jacobian(const DecoderState& state, double budget)
{
    const int n = state.config.n_out;
    const long params = parameter_count(state.config);
    if (static_cast<double>(n) * static_cast<double>(params) > budget) {
        throw BudgetExceeded("decoder_jacobian: " + std::to_string(n) + " x " + std::to_string(params) +
                             " exceeds the dense budget");
    }
    const DecoderCache cache = decoder_forward_cached(state);
    Matrix jac(n, params);
    Vector e = Vector::Zero(n);
    for (int r = 0; r < n; ++r) {
        e[r] = 1.0;
        jac.row(r) = flatten(decoder_backward(state, cache, e)).transpose();
        e[r] = 0.0;
    }
    return jac;
}

DecoderFit decoder_fit(const DecoderState& start, const Vector& y, const GDConfig& gd, const StoppingRule& stop,
                       const std::optional<Vector>& truth)
{
    const int n = start.config.n_out;
    require(y.size() == n, "decoder_fit: target has the wrong length");
    require(!truth || truth->size() == n, "decoder_fit: truth has the wrong length");
    require(std::isfinite(gd.eta) && gd.eta >= 0.0, "decoder_fit: eta must be finite and nonnegative");
    require(stop.kind != StoppingRule::Kind::Theory, "decoder_fit: the theory stopping rule applies to the generator");
    require(stop.kind != StoppingRule::Kind::OracleBest || truth.has_value(),
            "decoder_fit: the oracle stopping rule needs the ground truth");

    int horizon = gd.max_iters;
    if (stop.kind == StoppingRule::Kind::Fixed && stop.iterations >= 0) {
        horizon = stop.iterations;
    }

    const std::optional<TrigBasis> basis =
        gd.record_spectrum ? std::optional<TrigBasis>(TrigBasis(n)) : std::nullopt;
    std::vector<double> initial_norms;
    for (const auto& m : start.layers) {
        initial_norms.push_back(m.norm());
    }
    const Vector theta0 = flatten_parameters(start);

    DecoderFit result{FitTrace{}, start};
    FitTrace& trace = result.trace;
    trace.stop_iter = horizon;
    DecoderState state = start;
    double best_error = std::numeric_limits<double>::infinity();

    for (int tau = 0;; ++tau) {
        const DecoderCache cache = decoder_forward_cached(state);
        const Vector residual = y - cache.out;
        FitRecord rec;
        rec.iter = tau;
        rec.residual_norm = residual.norm();
        rec.loss = 0.5 * rec.residual_norm * rec.residual_norm;
        rec.weight_drift = (flatten_parameters(state) - theta0).norm();
        if (truth) {
            rec.error_to_truth = (*truth - cache.out).norm();
        }
        if (basis) {
            rec.coefficients = basis->analyze(residual);
        }
        for (std::size_t i = 0; i < state.layers.size(); ++i) {
            const double base = initial_norms[i];
            const double diff = (state.layers[i] - start.layers[i]).norm();
            rec.layer_drift.push_back(base > 0.0 ? diff / base : diff);
        }
        trace.records.push_back(std::move(rec));
        const FitRecord& last = trace.records.back();

        if (stop.kind == StoppingRule::Kind::OracleBest && last.error_to_truth < best_error) {
            best_error = last.error_to_truth;
            result.final_state = state;
            trace.stop_iter = tau;
        }
        if (stop.kind == StoppingRule::Kind::LossThreshold && last.loss <= stop.loss_threshold) {
            trace.stop_iter = tau;
            break;
        }
        if (tau >= horizon) {
            break;
        }
        const DecoderGradient g = decoder_backward(state, cache, -residual);
        for (std::size_t i = 0; i < state.layers.size(); ++i) {
            state.layers[i] -= gd.eta * g.layers[i];
        }
        state.output -= gd.eta * g.output;
    }
    if (stop.kind != StoppingRule::Kind::OracleBest) {
        result.final_state = std::move(state);
    }
    return result;
}

} // namespace specbias
