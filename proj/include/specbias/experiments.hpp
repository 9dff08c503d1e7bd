#pragma once

#include "specbias/decoder1d.hpp"
#include "specbias/fit_trace.hpp"
#include "specbias/signals.hpp"
#include "specbias/spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace specbias {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct KernelSpec {
    KernelPreset preset = KernelPreset::Triangular;
    KernelParams params{15, 1.0};
    std::vector<double> taps; // custom preset

    Kernel build(int n) const;
    std::string label() const;
};

struct GeneratorSpec {
    int k = 2048;
    std::optional<double> omega; // default ||y|| / (sqrt(n) ||U||)
};

struct DecoderSpec {
    int d = 2;
    int k = 64;
    DecoderVariant variant = DecoderVariant::BilinearUpsample;
    int filter_width = 3;
    std::optional<double> omega;
    std::optional<double> output_scale;
    Activation activation = Activation::Relu;

    DecoderConfig build(int n_out, std::uint64_t seed) const;
};

struct GDSpec {
    std::optional<double> eta;
    std::string eta_rule = "beta"; // "beta": 1/||U||^2, "dual": 1/max sigma_i^2
    int max_iters = 2000;
    bool record_spectrum = false;
};

struct StopSpec {
    std::string rule = "theory"; // theory | fixed | oracle | loss
    int iterations = 0;
    double loss_threshold = 0.0;
};

struct SignalSpec {
    SignalLaw law = SignalLaw::RandomInSpan;
    int p = 8;
    std::vector<double> coefficients;
    std::vector<double> values;
    int trig_index = 2;
    double step_level = 0.5;
};

struct NoiseSpec {
    double varsigma = 1.0;
};

struct FitCurvesSpec {
    std::string architecture = "generator"; // generator | decoder
    double mse_threshold = 0.01;            // per-entry mean squared residual
    double target_rms = 0.5;                // rescaling of in-span and trig targets
};

struct ReportSpec {
    std::vector<KernelSpec> kernels;
    int low_frequency_count = 10;
};

struct JacobianSpec {
    std::string architecture = "generator";
    int top_s = 5;
    std::vector<int> checkpoints{0};
    bool dump_sigma = false;
};

/// Every experiment reads the sections it needs and ignores the rest. The
/// resolved form (all defaults written out) is stored with each result.
struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string experiment = "denoise";
    std::uint64_t seed = 0;
    int repetitions = 1;
    int n = 256;
    double convergence_tol = 1e-6; // converged when loss <= tol ||y||^2
    KernelSpec kernel;
    GeneratorSpec generator;
    DecoderSpec decoder;
    GDSpec gd;
    StopSpec stop;
    SignalSpec signal;
    NoiseSpec noise;
    FitCurvesSpec fit_curves;
    ReportSpec report;
    JacobianSpec jacobian;

    void validate() const;
};

/// Unknown keys and a schema_version other than kSchemaVersion are errors.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);
Json to_json(const ExperimentConfig& cfg);

/// Independent stream for repetition `rep` and purpose `stream`.
std::uint64_t derive_seed(std::uint64_t seed, int rep, int stream);

struct ExperimentResult {
    Json summary;
    std::vector<std::pair<std::string, std::string>> files; // name, CSV; the first is the primary output
};

struct DenoiseSeed {
    int rep = 0;
    std::uint64_t seed = 0;
    int stop_iter = 0;
    double mse_stop = 0.0;
    double psnr_stop = 0.0;
    int oracle_iter = 0;
    double mse_oracle = 0.0;
    int converged_iter = 0;
    double mse_converged = 0.0;
    double bound = 0.0;
    double y_norm = 0.0;
    double implied_epsilon = 0.0; // max(0, ||x - G|| - bound without the epsilon term) / ||y||
};

/// MSE here is the squared error norm ||x - G(C_tau)||^2, the scale of the
/// noise energy E||z||^2 = varsigma^2.
struct DenoiseResult {
    ExperimentConfig config;
    double eta = 0.0;
    double beta = 0.0;
    std::vector<DenoiseSeed> per_seed;
    double median_mse_stop = 0.0;
    double median_mse_oracle = 0.0;
    double median_mse_converged = 0.0;
    double bound_value = 0.0;
    double runtime_seconds = 0.0;
    std::vector<std::string> diagnostics;
};

DenoiseResult run_denoise(const ExperimentConfig& cfg);
ExperimentResult to_result(const DenoiseResult& result);

struct FitCurveSeed {
    int rep = 0;
    int iters_structured = -1; // -1: threshold not reached within max_iters
    int iters_noise = -1;
    std::vector<double> mse_structured;
    std::vector<double> mse_noise;
    std::vector<std::vector<double>> drift_structured; // decoder only, per layer at the last iterate
    std::vector<std::vector<double>> drift_noise;
};

struct FitCurvesResult {
    ExperimentConfig config;
    std::vector<FitCurveSeed> per_seed;
    double median_ratio = 0.0; // iterations(noise) / iterations(structured); +inf if noise never reached it
    double runtime_seconds = 0.0;
};

/// Fits the same architecture to a structured target and to Gaussian noise
/// rescaled to the same norm, each from the same initialization.
FitCurvesResult run_fit_curves(const ExperimentConfig& cfg);
ExperimentResult to_result(const FitCurvesResult& result);

ExperimentResult run_dual_kernel(const ExperimentConfig& cfg);
ExperimentResult run_spectral_report(const ExperimentConfig& cfg);
ExperimentResult run_dynamics(const ExperimentConfig& cfg);
ExperimentResult run_jacobian(const ExperimentConfig& cfg);
ExperimentResult run_decoder(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Step size chosen by the config (explicit value, or the beta/dual rule).
double resolve_eta(const GDSpec& gd, const CirculantOperator& op);

} // namespace specbias
