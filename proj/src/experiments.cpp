#include "specbias/experiments.hpp"

#include "specbias/dynamics.hpp"
#include "specbias/errors.hpp"
#include "specbias/generator.hpp"
#include "specbias/jacobian_lab.hpp"
#include "specbias/linalg.hpp"
#include "specbias/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace specbias {
namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw InvalidArgument("config: '" + path_ + "' must be an object");
        }
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            return;
        }
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("config: '" + where(key) + "' has the wrong type (" + e.what() + ")");
        }
    }

    void get_optional(const char* key, std::optional<double>& out)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return;
        }
        if (!it->is_number()) {
            throw InvalidArgument("config: '" + where(key) + "' must be a number or null");
        }
        out = it->get<double>();
    }

    const Json* child(const char* key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw InvalidArgument("config: unknown key '" + where(it.key()) + "'");
            }
        }
    }

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

KernelSpec parse_kernel(const Json& j, const std::string& path)
{
    ObjectReader r(j, path);
    KernelSpec spec;
    std::string preset = to_string(spec.preset);
    r.get("preset", preset);
    spec.preset = kernel_preset_from_string(preset);
    r.get("width", spec.params.width);
    r.get("std", spec.params.std_dev);
    r.get("taps", spec.taps);
    r.finish();
    return spec;
}

Json kernel_json(const KernelSpec& k)
{
    Json j;
    j["preset"] = to_string(k.preset);
    j["width"] = k.params.width;
    j["std"] = k.params.std_dev;
    j["taps"] = k.taps;
    return j;
}

Json optional_json(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::string activation_name(Activation a)
{
    return a == Activation::Relu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& s)
{
    if (s == "relu") {
        return Activation::Relu;
    }
    if (s == "identity") {
        return Activation::Identity;
    }
    throw InvalidArgument("config: unknown activation '" + s + "'");
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

SignalModel signal_model(const ExperimentConfig& cfg, std::uint64_t seed)
{
    SignalModel m;
    m.n = cfg.n;
    m.p = cfg.signal.p;
    m.law = cfg.signal.law;
    m.coefficients = Eigen::Map<const Vector>(cfg.signal.coefficients.data(),
                                              static_cast<Eigen::Index>(cfg.signal.coefficients.size()));
    m.values = Eigen::Map<const Vector>(cfg.signal.values.data(), static_cast<Eigen::Index>(cfg.signal.values.size()));
    m.trig_index = cfg.signal.trig_index;
    m.step_level = cfg.signal.step_level;
    m.seed = seed;
    return m;
}

struct Observation {
    Vector x;
    Vector z;
    Vector y;
};

Observation observe(const ExperimentConfig& cfg, int rep)
{
    Observation o;
    o.x = gen_signal(signal_model(cfg, derive_seed(cfg.seed, rep, 0)));
    o.z = gen_noise(NoiseModel{cfg.n, cfg.noise.varsigma, derive_seed(cfg.seed, rep, 1)});
    o.y = o.x + o.z;
    return o;
}

GeneratorState generator_for(const ExperimentConfig& cfg, const CirculantOperator& op, double y_norm, int rep)
{
    GeneratorConfig gc{cfg.n, cfg.generator.k, op.kernel(), 1.0, derive_seed(cfg.seed, rep, 2)};
    gc.omega = cfg.generator.omega ? *cfg.generator.omega : default_omega(y_norm, cfg.n, operator_norm(op));
    return init_generator(gc);
}

double decoder_eta(const ExperimentConfig& cfg)
{
    return cfg.gd.eta ? *cfg.gd.eta : 1e-3;
}

} // namespace

Kernel KernelSpec::build(int n) const
{
    if (preset == KernelPreset::Custom) {
        require(static_cast<int>(taps.size()) == n, "kernel: custom taps must have length n");
        return Kernel(Eigen::Map<const Vector>(taps.data(), n), KernelPreset::Custom);
    }
    return make_kernel(preset, params, n);
}

std::string KernelSpec::label() const
{
    switch (preset) {
    case KernelPreset::Triangular:
        return "triangular_w" + std::to_string(params.width);
    case KernelPreset::Gaussian: {
        std::ostringstream os;
        os << "gaussian_s" << params.std_dev;
        return os.str();
    }
    default:
        return to_string(preset);
    }
}

DecoderConfig DecoderSpec::build(int n_out, std::uint64_t seed) const
{
    DecoderConfig c;
    c.d = d;
    c.k = k;
    c.n_out = n_out;
    c.variant = variant;
    c.filter_width = filter_width;
    c.seed = seed;
    c.omega = omega;
    c.output_scale = output_scale;
    c.activation = activation;
    c.validate();
    return c;
}

void ExperimentConfig::validate() const
{
    require(schema_version == kSchemaVersion, "config: unsupported schema_version " + std::to_string(schema_version));
    require(repetitions >= 1, "config: repetitions must be positive");
    require(n >= 4 && n % 2 == 0, "config: n must be an even integer >= 4");
    require(convergence_tol >= 0.0, "config: convergence_tol must be nonnegative");
    require(gd.max_iters >= 0, "config: gd.max_iters must be nonnegative");
    require(gd.eta_rule == "beta" || gd.eta_rule == "dual", "config: gd.eta_rule must be 'beta' or 'dual'");
    if (gd.eta) {
        require(std::isfinite(*gd.eta) && *gd.eta >= 0.0, "config: gd.eta must be finite and nonnegative");
    }
    require(stop.rule == "theory" || stop.rule == "fixed" || stop.rule == "oracle" || stop.rule == "loss",
            "config: stop.rule must be theory, fixed, oracle or loss");
    require(noise.varsigma >= 0.0, "config: noise.varsigma must be nonnegative");
    require(fit_curves.architecture == "generator" || fit_curves.architecture == "decoder",
            "config: fit_curves.architecture must be generator or decoder");
    require(fit_curves.mse_threshold > 0.0, "config: fit_curves.mse_threshold must be positive");
    require(jacobian.architecture == "generator" || jacobian.architecture == "decoder",
            "config: jacobian.architecture must be generator or decoder");
    require(jacobian.top_s >= 1, "config: jacobian.top_s must be positive");
    require(generator.k >= 2 && generator.k % 2 == 0, "config: generator.k must be an even integer >= 2");
}

ExperimentConfig parse_config(const Json& doc)
{
    ObjectReader r(doc, "");
    ExperimentConfig cfg;
    if (!doc.contains("schema_version")) {
        throw InvalidArgument("config: missing schema_version");
    }
    r.get("schema_version", cfg.schema_version);
    require(cfg.schema_version == kSchemaVersion,
            "config: unsupported schema_version " + std::to_string(cfg.schema_version));
    r.get("experiment", cfg.experiment);
    r.get("seed", cfg.seed);
    r.get("repetitions", cfg.repetitions);
    r.get("n", cfg.n);
    r.get("convergence_tol", cfg.convergence_tol);

    if (const Json* j = r.child("kernel")) {
        cfg.kernel = parse_kernel(*j, "kernel");
    }
    if (const Json* j = r.child("generator")) {
        ObjectReader g(*j, "generator");
        g.get("k", cfg.generator.k);
        g.get_optional("omega", cfg.generator.omega);
        g.finish();
    }
    if (const Json* j = r.child("decoder")) {
        ObjectReader g(*j, "decoder");
        std::string variant = to_string(cfg.decoder.variant);
        std::string activation = activation_name(cfg.decoder.activation);
        g.get("d", cfg.decoder.d);
        g.get("k", cfg.decoder.k);
        g.get("variant", variant);
        g.get("filter_width", cfg.decoder.filter_width);
        g.get_optional("omega", cfg.decoder.omega);
        g.get_optional("output_scale", cfg.decoder.output_scale);
        g.get("activation", activation);
        g.finish();
        cfg.decoder.variant = decoder_variant_from_string(variant);
        cfg.decoder.activation = activation_from_string(activation);
    }
    if (const Json* j = r.child("gd")) {
        ObjectReader g(*j, "gd");
        g.get_optional("eta", cfg.gd.eta);
        g.get("eta_rule", cfg.gd.eta_rule);
        g.get("max_iters", cfg.gd.max_iters);
        g.get("record_spectrum", cfg.gd.record_spectrum);
        g.finish();
    }
    if (const Json* j = r.child("stop")) {
        ObjectReader g(*j, "stop");
        g.get("rule", cfg.stop.rule);
        g.get("iterations", cfg.stop.iterations);
        g.get("loss_threshold", cfg.stop.loss_threshold);
        g.finish();
    }
    if (const Json* j = r.child("signal")) {
        ObjectReader g(*j, "signal");
        std::string law = to_string(cfg.signal.law);
        g.get("law", law);
        g.get("p", cfg.signal.p);
        g.get("coefficients", cfg.signal.coefficients);
        g.get("values", cfg.signal.values);
        g.get("trig_index", cfg.signal.trig_index);
        g.get("step_level", cfg.signal.step_level);
        g.finish();
        cfg.signal.law = signal_law_from_string(law);
    }
    if (const Json* j = r.child("noise")) {
        ObjectReader g(*j, "noise");
        g.get("varsigma", cfg.noise.varsigma);
        g.finish();
    }
    if (const Json* j = r.child("fit_curves")) {
        ObjectReader g(*j, "fit_curves");
        g.get("architecture", cfg.fit_curves.architecture);
        g.get("mse_threshold", cfg.fit_curves.mse_threshold);
        g.get("target_rms", cfg.fit_curves.target_rms);
        g.finish();
    }
    if (const Json* j = r.child("report")) {
        ObjectReader g(*j, "report");
        g.get("low_frequency_count", cfg.report.low_frequency_count);
        if (const Json* ks = g.child("kernels")) {
            require(ks->is_array(), "config: report.kernels must be an array");
            for (std::size_t i = 0; i < ks->size(); ++i) {
                cfg.report.kernels.push_back(parse_kernel((*ks)[i], "report.kernels[" + std::to_string(i) + "]"));
            }
        }
        g.finish();
    }
    if (const Json* j = r.child("jacobian")) {
        ObjectReader g(*j, "jacobian");
        g.get("architecture", cfg.jacobian.architecture);
        g.get("top_s", cfg.jacobian.top_s);
        g.get("checkpoints", cfg.jacobian.checkpoints);
        g.get("dump_sigma", cfg.jacobian.dump_sigma);
        g.finish();
    }
    r.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("config: cannot open '" + path + "'");
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config: '" + path + "' is not valid JSON (" + e.what() + ")");
    }
    return parse_config(doc);
}

Json to_json(const ExperimentConfig& cfg)
{
    Json j;
    j["schema_version"] = cfg.schema_version;
    j["experiment"] = cfg.experiment;
    j["seed"] = cfg.seed;
    j["repetitions"] = cfg.repetitions;
    j["n"] = cfg.n;
    j["convergence_tol"] = cfg.convergence_tol;
    j["kernel"] = kernel_json(cfg.kernel);
    j["generator"] = {{"k", cfg.generator.k}, {"omega", optional_json(cfg.generator.omega)}};
    j["decoder"] = {{"d", cfg.decoder.d},
                    {"k", cfg.decoder.k},
                    {"variant", to_string(cfg.decoder.variant)},
                    {"filter_width", cfg.decoder.filter_width},
                    {"omega", optional_json(cfg.decoder.omega)},
                    {"output_scale", optional_json(cfg.decoder.output_scale)},
                    {"activation", activation_name(cfg.decoder.activation)}};
    j["gd"] = {{"eta", optional_json(cfg.gd.eta)},
               {"eta_rule", cfg.gd.eta_rule},
               {"max_iters", cfg.gd.max_iters},
               {"record_spectrum", cfg.gd.record_spectrum}};
    j["stop"] = {{"rule", cfg.stop.rule}, {"iterations", cfg.stop.iterations},
                 {"loss_threshold", cfg.stop.loss_threshold}};
    j["signal"] = {{"law", to_string(cfg.signal.law)},     {"p", cfg.signal.p},
                   {"coefficients", cfg.signal.coefficients}, {"values", cfg.signal.values},
                   {"trig_index", cfg.signal.trig_index},   {"step_level", cfg.signal.step_level}};
    j["noise"] = {{"varsigma", cfg.noise.varsigma}};
    j["fit_curves"] = {{"architecture", cfg.fit_curves.architecture},
                       {"mse_threshold", cfg.fit_curves.mse_threshold},
                       {"target_rms", cfg.fit_curves.target_rms}};
    Json kernels = Json::array();
    for (const auto& k : cfg.report.kernels) {
        kernels.push_back(kernel_json(k));
    }
    j["report"] = {{"kernels", kernels}, {"low_frequency_count", cfg.report.low_frequency_count}};
    j["jacobian"] = {{"architecture", cfg.jacobian.architecture},
                     {"top_s", cfg.jacobian.top_s},
                     {"checkpoints", cfg.jacobian.checkpoints},
                     {"dump_sigma", cfg.jacobian.dump_sigma}};
    return j;
}

std::uint64_t derive_seed(std::uint64_t seed, int rep, int stream)
{
    // splitmix64 finalizer over (seed + rep, stream).
    std::uint64_t z = seed + static_cast<std::uint64_t>(rep) + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double resolve_eta(const GDSpec& gd, const CirculantOperator& op)
{
    if (gd.eta) {
        return *gd.eta;
    }
    if (gd.eta_rule == "dual") {
        const double top = dual_kernel(op.kernel()).sigma.maxCoeff();
        return 1.0 / (top * top);
    }
    const double beta = operator_norm(op);
    return 1.0 / (beta * beta);
}

DenoiseResult run_denoise(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    DenoiseResult result;
    result.config = cfg;
    const int n = cfg.n;
    const int p = cfg.signal.p;
    require(cfg.signal.law == SignalLaw::RandomInSpan || cfg.signal.law == SignalLaw::Explicit,
            "denoise: the signal must lie in span{w_1..w_p}");
    require(p >= 1 && p < n, "denoise: need 1 <= p < n");

    const CirculantOperator op(cfg.kernel.build(n));
    const DualKernel dual = dual_kernel(op.kernel());
    result.diagnostics = dual.diagnostics;
    result.beta = operator_norm(op);
    result.eta = resolve_eta(cfg.gd, op);
    result.config.gd.eta = result.eta;

    int stop_iter = 0;
    if (cfg.stop.rule == "theory") {
        stop_iter = stopping_time(p, n, result.eta, dual.sigma[p]);
    } else if (cfg.stop.rule == "fixed") {
        require(cfg.stop.iterations >= 0, "denoise: stop.iterations must be nonnegative");
        stop_iter = cfg.stop.iterations;
    } else {
        throw InvalidArgument("denoise: stop.rule must be theory or fixed");
    }
    const int horizon = std::max(cfg.gd.max_iters, stop_iter);
    if (horizon > cfg.gd.max_iters) {
        result.diagnostics.push_back("max_iters raised to the stopping time " + std::to_string(stop_iter));
    }

    result.per_seed.resize(static_cast<std::size_t>(cfg.repetitions));
    parallel_for(cfg.repetitions, [&](int rep) {
        const Observation obs = observe(cfg, rep);
        const double y_norm = obs.y.norm();
        const GeneratorState state = generator_for(cfg, op, y_norm, rep);
        const GDConfig gd{result.eta, horizon, false};
        const auto fitted =
            fit(state, obs.y, gd, StoppingRule::loss_below(cfg.convergence_tol * y_norm * y_norm), obs.x);
        const FitTrace& trace = fitted.trace;

        DenoiseSeed s;
        s.rep = rep;
        s.seed = cfg.seed + static_cast<std::uint64_t>(rep);
        s.y_norm = y_norm;
        s.stop_iter = std::min(stop_iter, trace.last_iter());
        const double err_stop = trace.at(s.stop_iter).error_to_truth;
        s.mse_stop = err_stop * err_stop;
        s.psnr_stop = psnr(obs.x, s.mse_stop);
        s.mse_oracle = std::numeric_limits<double>::infinity();
        for (const auto& rec : trace.records) {
            const double e2 = rec.error_to_truth * rec.error_to_truth;
            if (e2 < s.mse_oracle) {
                s.mse_oracle = e2;
                s.oracle_iter = rec.iter;
            }
        }
        s.converged_iter = trace.last_iter();
        s.mse_converged = trace.records.back().error_to_truth * trace.records.back().error_to_truth;
        s.bound = denoising_bound(obs.x.norm(), p, n, cfg.noise.varsigma, result.eta, dual.sigma[p - 1], s.stop_iter,
                                  0.0, y_norm);
        s.implied_epsilon = std::max(0.0, err_stop - s.bound) / y_norm;
        result.per_seed[static_cast<std::size_t>(rep)] = s;
    });

    std::vector<double> stop_mse;
    std::vector<double> oracle_mse;
    std::vector<double> conv_mse;
    std::vector<double> bounds;
    for (const auto& s : result.per_seed) {
        stop_mse.push_back(s.mse_stop);
        oracle_mse.push_back(s.mse_oracle);
        conv_mse.push_back(s.mse_converged);
        bounds.push_back(s.bound);
    }
    result.median_mse_stop = median(stop_mse);
    result.median_mse_oracle = median(oracle_mse);
    result.median_mse_converged = median(conv_mse);
    result.bound_value = median(bounds);
    result.runtime_seconds = seconds_since(start);
    return result;
}

ExperimentResult to_result(const DenoiseResult& r)
{
    ExperimentResult out;
    std::ostringstream csv;
    csv.precision(17);
    csv << "rep,seed,stop_iter,mse_stop,psnr_stop,oracle_iter,mse_oracle,converged_iter,mse_converged,bound,y_norm,"
           "implied_epsilon\n";
    Json per_seed = Json::array();
    for (const auto& s : r.per_seed) {
        csv << s.rep << ',' << s.seed << ',' << s.stop_iter << ',' << s.mse_stop << ',' << s.psnr_stop << ','
            << s.oracle_iter << ',' << s.mse_oracle << ',' << s.converged_iter << ',' << s.mse_converged << ','
            << s.bound << ',' << s.y_norm << ',' << s.implied_epsilon << '\n';
        per_seed.push_back({{"rep", s.rep},
                            {"seed", s.seed},
                            {"stop_iter", s.stop_iter},
                            {"mse_stop", s.mse_stop},
                            {"psnr_stop", s.psnr_stop},
                            {"oracle_iter", s.oracle_iter},
                            {"mse_oracle", s.mse_oracle},
                            {"converged_iter", s.converged_iter},
                            {"mse_converged", s.mse_converged},
                            {"bound", s.bound},
                            {"y_norm", s.y_norm},
                            {"implied_epsilon", s.implied_epsilon}});
    }
    out.summary["config"] = to_json(r.config);
    out.summary["per_seed"] = per_seed;
    out.summary["median_mse_stop"] = r.median_mse_stop;
    out.summary["median_mse_oracle"] = r.median_mse_oracle;
    out.summary["median_mse_converged"] = r.median_mse_converged;
    out.summary["bound_value"] = r.bound_value;
    out.summary["eta"] = r.eta;
    out.summary["beta"] = r.beta;
    out.summary["diagnostics"] = r.diagnostics;
    out.summary["runtime_seconds"] = r.runtime_seconds;
    out.files.emplace_back("denoise_per_seed.csv", csv.str());
    return out;
}

FitCurvesResult run_fit_curves(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    FitCurvesResult result;
    result.config = cfg;
    const int n = cfg.n;
    const bool use_decoder = cfg.fit_curves.architecture == "decoder";
    const double threshold_loss = 0.5 * cfg.fit_curves.mse_threshold * n;

    std::optional<CirculantOperator> op;
    double eta = 0.0;
    if (use_decoder) {
        eta = decoder_eta(cfg);
    } else {
        op.emplace(cfg.kernel.build(n));
        eta = resolve_eta(cfg.gd, *op);
    }
    result.config.gd.eta = eta;
    const GDConfig gd{eta, cfg.gd.max_iters, false};
    const StoppingRule stop = StoppingRule::loss_below(threshold_loss);

    result.per_seed.resize(static_cast<std::size_t>(cfg.repetitions));
    parallel_for(cfg.repetitions, [&](int rep) {
        Vector target = gen_signal(signal_model(cfg, derive_seed(cfg.seed, rep, 0)));
        if (cfg.signal.law != SignalLaw::Step && cfg.signal.law != SignalLaw::Custom) {
            target *= cfg.fit_curves.target_rms * std::sqrt(static_cast<double>(n)) / target.norm();
        }
        Vector noise = gen_noise(NoiseModel{n, 1.0, derive_seed(cfg.seed, rep, 1)});
        noise *= target.norm() / noise.norm();

        FitCurveSeed s;
        s.rep = rep;
        auto run = [&](const Vector& y, int& iters, std::vector<double>& curve, std::vector<std::vector<double>>& drift) {
            FitTrace trace;
            if (use_decoder) {
                const DecoderState state = init_decoder(cfg.decoder.build(n, derive_seed(cfg.seed, rep, 2)));
                trace = decoder_fit(state, y, gd, stop).trace;
                drift.push_back(trace.records.back().layer_drift);
            } else {
                const GeneratorState state = generator_for(cfg, *op, target.norm(), rep);
                trace = fit(state, y, gd, stop).trace;
            }
            for (const auto& rec : trace.records) {
                curve.push_back(2.0 * rec.loss / n);
            }
            iters = trace.records.back().loss <= threshold_loss ? trace.last_iter() : -1;
        };
        run(target, s.iters_structured, s.mse_structured, s.drift_structured);
        run(noise, s.iters_noise, s.mse_noise, s.drift_noise);
        result.per_seed[static_cast<std::size_t>(rep)] = std::move(s);
    });

    std::vector<double> ratios;
    for (const auto& s : result.per_seed) {
        if (s.iters_structured < 0) {
            ratios.push_back(std::numeric_limits<double>::quiet_NaN());
        } else if (s.iters_noise < 0) {
            ratios.push_back(std::numeric_limits<double>::infinity());
        } else {
            ratios.push_back(static_cast<double>(s.iters_noise) / std::max(1, s.iters_structured));
        }
    }
    bool any_nan = false;
    for (double v : ratios) {
        any_nan = any_nan || std::isnan(v);
    }
    result.median_ratio = any_nan ? std::numeric_limits<double>::quiet_NaN() : median(ratios);
    result.runtime_seconds = seconds_since(start);
    return result;
}

ExperimentResult to_result(const FitCurvesResult& r)
{
    ExperimentResult out;
    std::ostringstream csv;
    csv.precision(17);
    csv << "rep,iter,mse_structured,mse_noise\n";
    Json per_seed = Json::array();
    for (const auto& s : r.per_seed) {
        const std::size_t len = std::max(s.mse_structured.size(), s.mse_noise.size());
        for (std::size_t t = 0; t < len; ++t) {
            csv << s.rep << ',' << t << ',';
            if (t < s.mse_structured.size()) {
                csv << s.mse_structured[t];
            }
            csv << ',';
            if (t < s.mse_noise.size()) {
                csv << s.mse_noise[t];
            }
            csv << '\n';
        }
        Json entry{{"rep", s.rep}, {"iters_structured", s.iters_structured}, {"iters_noise", s.iters_noise}};
        if (!s.drift_structured.empty()) {
            entry["layer_drift_structured"] = s.drift_structured.front();
            entry["layer_drift_noise"] = s.drift_noise.front();
        }
        per_seed.push_back(entry);
    }
    out.summary["config"] = to_json(r.config);
    out.summary["per_seed"] = per_seed;
    out.summary["median_ratio"] = std::isfinite(r.median_ratio) ? Json(r.median_ratio) : Json(fmt(r.median_ratio));
    out.summary["runtime_seconds"] = r.runtime_seconds;
    out.files.emplace_back("fit_curves.csv", csv.str());
    return out;
}

ExperimentResult run_dual_kernel(const ExperimentConfig& cfg)
{
    cfg.validate();
    const DualKernel dual = dual_kernel(cfg.kernel.build(cfg.n));
    ExperimentResult out;
    out.summary["config"] = to_json(cfg);
    out.summary["kernel"] = cfg.kernel.label();
    out.summary["diagnostics"] = dual.diagnostics;
    out.files.emplace_back("dual_kernel.csv", spectrum_csv(dual.sigma));
    return out;
}

ExperimentResult run_spectral_report(const ExperimentConfig& cfg)
{
    cfg.validate();
    ExperimentConfig resolved = cfg;
    if (resolved.report.kernels.empty()) {
        for (int w : {3, 15, 63}) {
            if (w < cfg.n) {
                resolved.report.kernels.push_back({KernelPreset::Triangular, {w, 1.0}, {}});
            }
        }
        resolved.report.kernels.push_back({KernelPreset::Gaussian, {3, 2.0}, {}});
    }
    ExperimentResult out;
    std::ostringstream mass;
    mass.precision(17);
    mass << "kernel,low_frequency_mass,beta,max_sigma,min_sigma\n";
    Json kernels = Json::array();
    std::vector<std::pair<std::string, std::string>> detail;
    for (const auto& spec : resolved.report.kernels) {
        const Kernel kernel = spec.build(cfg.n);
        const CirculantOperator op(kernel);
        const DualKernel dual = dual_kernel(kernel);
        const std::string label = spec.label();
        const double lf = low_frequency_mass(dual.sigma, std::min(cfg.report.low_frequency_count, cfg.n));
        mass << label << ',' << lf << ',' << operator_norm(op) << ',' << dual.sigma.maxCoeff() << ','
             << dual.sigma.minCoeff() << '\n';

        const EigenSystem eig = sigma_eigensystem(sigma_closed_form(op));
        std::ostringstream ev;
        ev.precision(17);
        ev << "rank,trig_index,frequency,eigenvalue,dual_sigma_squared\n";
        const TrigBasis basis(cfg.n);
        for (int r = 0; r < cfg.n; ++r) {
            const int idx = eig.fast_path ? eig.trig_index[static_cast<std::size_t>(r)] : 0;
            ev << r + 1 << ',' << idx << ',' << (idx ? basis.frequency(idx) : -1) << ',' << eig.values[r] << ','
               << (idx ? dual.sigma[idx - 1] * dual.sigma[idx - 1] : std::numeric_limits<double>::quiet_NaN())
               << '\n';
        }
        detail.emplace_back("dual_" + label + ".csv", spectrum_csv(dual.sigma));
        detail.emplace_back("sigma_eigenvalues_" + label + ".csv", ev.str());
        kernels.push_back({{"kernel", label}, {"low_frequency_mass", lf}, {"diagnostics", dual.diagnostics}});
    }
    out.summary["config"] = to_json(resolved);
    out.summary["kernels"] = kernels;
    out.files.emplace_back("low_frequency_mass.csv", mass.str());
    for (auto& f : detail) {
        out.files.push_back(std::move(f));
    }
    return out;
}

ExperimentResult run_dynamics(const ExperimentConfig& cfg)
{
    cfg.validate();
    const int n = cfg.n;
    const CirculantOperator op(cfg.kernel.build(n));
    const DualKernel dual = dual_kernel(op.kernel());
    const double beta = operator_norm(op);
    const double eta = resolve_eta(cfg.gd, op);
    const Observation obs = observe(cfg, 0);
    const GeneratorState state = generator_for(cfg, op, obs.y.norm(), 0);
    const auto fitted = fit(state, obs.y, GDConfig{eta, cfg.gd.max_iters, true}, StoppingRule::fixed(cfg.gd.max_iters),
                            obs.x);
    const Vector r0 = obs.y - forward(state);
    const SpectralSystem sys(TrigBasis(n), dual.sigma, eta);

    TheoryInputs in;
    in.n = n;
    in.k = cfg.generator.k;
    in.delta = 0.05;
    in.xi = 1.0 / std::sqrt(32.0 * std::log(2.0 * n / in.delta));
    in.alpha = dual.sigma.minCoeff();
    in.beta = beta;
    in.eta = eta;
    in.max_iters = std::max(1, cfg.gd.max_iters);
    in.y_norm = obs.y.norm();
    in.r0_norm = r0.norm();
    std::optional<TheoryParams> theory;
    Json theory_json;
    if (in.alpha > 0.0) {
        theory = theory_params(in);
        theory_json = {{"alpha", in.alpha},         {"beta", in.beta},       {"xi", in.xi},
                       {"delta", in.delta},         {"epsilon0", theory->epsilon0}, {"epsilon", theory->epsilon},
                       {"omega", theory->omega},    {"radius", theory->radius},    {"required_k", theory->required_k},
                       {"flags", theory->flags}};
    }
    const LinearizationGap gap = linearization_gap(fitted.trace, sys, r0, theory);

    ExperimentResult out;
    out.summary["config"] = to_json(cfg);
    out.summary["eta"] = eta;
    out.summary["max_gap"] = gap.max_gap();
    out.summary["relative_max_gap"] = gap.max_gap() / r0.norm();
    out.summary["theory"] = theory_json;
    out.summary["diagnostics"] = fitted.trace.diagnostics;
    out.files.emplace_back("dynamics.csv", linearization_gap_csv(gap));
    out.files.emplace_back("fit_trace.csv", fit_trace_csv(fitted.trace));
    return out;
}

ExperimentResult run_jacobian(const ExperimentConfig& cfg)
{
    cfg.validate();
    const int n = cfg.n;
    std::vector<int> checkpoints = cfg.jacobian.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    require(!checkpoints.empty() && checkpoints.front() >= 0, "jacobian: checkpoints must be nonnegative");
    const int top_s = std::min(cfg.jacobian.top_s, n);
    ExperimentResult out;
    out.summary["config"] = to_json(cfg);
    Json snaps = Json::array();
    std::vector<SpectrumSnapshot> taken;

    const Observation obs = observe(cfg, 0);
    if (cfg.jacobian.architecture == "generator") {
        const CirculantOperator op(cfg.kernel.build(n));
        const double eta = resolve_eta(cfg.gd, op);
        GeneratorState state = generator_for(cfg, op, obs.y.norm(), 0);
        const ConcentrationGap conc = concentration_gap(state);
        out.summary["concentration_gap"] = conc.gap;
        out.summary["concentration_bound"] = conc.bound;
        out.summary["eta"] = eta;
        int at = 0;
        for (int c : checkpoints) {
            if (c > at) {
                state = fit(state, obs.y, GDConfig{eta, c - at, false}, StoppingRule::fixed(c - at)).final_state;
                at = c;
            }
            taken.push_back(spectrum_from_gram(jacobian_gram(state), top_s, c));
        }
        if (cfg.jacobian.dump_sigma) {
            require(n <= 64, "jacobian: Sigma(U) dumps are limited to n <= 64");
            out.files.emplace_back("sigma.csv", matrix_csv(sigma_closed_form(op).values));
        }
    } else {
        const double eta = decoder_eta(cfg);
        out.summary["eta"] = eta;
        DecoderState state = init_decoder(cfg.decoder.build(n, derive_seed(cfg.seed, 0, 2)));
        int at = 0;
        for (int c : checkpoints) {
            if (c > at) {
                state = decoder_fit(state, obs.y, GDConfig{eta, c - at, false}, StoppingRule::fixed(c - at)).final_state;
                at = c;
            }
            taken.push_back(spectrum_from_jacobian(decoder_jacobian(state), top_s, c));
        }
    }
    for (std::size_t i = 0; i < taken.size(); ++i) {
        const auto& s = taken[i];
        Json entry{{"iter", s.iter}, {"best_trig_index", s.best_trig_index}, {"correlation", s.correlation}};
        if (i > 0) {
            entry["correlation_with_previous"] = snapshot_correlations(taken[i - 1], s);
        }
        snaps.push_back(entry);
        out.files.insert(out.files.begin() + static_cast<std::ptrdiff_t>(i),
                         {"spectrum_iter_" + std::to_string(s.iter) + ".csv", snapshot_csv(s)});
    }
    out.summary["snapshots"] = snaps;
    return out;
}

ExperimentResult run_decoder(const ExperimentConfig& cfg)
{
    cfg.validate();
    const Observation obs = observe(cfg, 0);
    const DecoderState state = init_decoder(cfg.decoder.build(cfg.n, derive_seed(cfg.seed, 0, 2)));
    const double eta = decoder_eta(cfg);
    StoppingRule stop = StoppingRule::fixed(cfg.gd.max_iters);
    if (cfg.stop.rule == "loss") {
        stop = StoppingRule::loss_below(cfg.stop.loss_threshold);
    } else if (cfg.stop.rule == "oracle") {
        stop = StoppingRule::oracle_best();
    } else if (cfg.stop.rule == "fixed") {
        stop = StoppingRule::fixed(cfg.stop.iterations);
    }
    const auto fitted = decoder_fit(state, obs.y, GDConfig{eta, cfg.gd.max_iters, cfg.gd.record_spectrum}, stop, obs.x);
    ExperimentResult out;
    ExperimentConfig resolved = cfg;
    resolved.gd.eta = eta;
    out.summary["config"] = to_json(resolved);
    out.summary["parameter_count"] = parameter_count(state.config);
    out.summary["stop_iter"] = fitted.trace.stop_iter;
    out.summary["final_loss"] = fitted.trace.records.back().loss;
    out.files.emplace_back("decoder_trace.csv", fit_trace_csv(fitted.trace));
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.experiment == "denoise") {
        return to_result(run_denoise(cfg));
    }
    if (cfg.experiment == "fit-curves") {
        return to_result(run_fit_curves(cfg));
    }
    if (cfg.experiment == "dual-kernel") {
        return run_dual_kernel(cfg);
    }
    if (cfg.experiment == "report") {
        return run_spectral_report(cfg);
    }
    if (cfg.experiment == "dynamics") {
        return run_dynamics(cfg);
    }
    if (cfg.experiment == "jacobian") {
        return run_jacobian(cfg);
    }
    if (cfg.experiment == "decoder") {
        return run_decoder(cfg);
    }
    throw InvalidArgument("unknown experiment '" + cfg.experiment + "'");
}

} // namespace specbias
