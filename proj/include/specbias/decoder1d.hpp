#pragma once

#include "specbias/fit_trace.hpp"
#include "specbias/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace specbias {

enum class DecoderVariant { BilinearUpsample, FixedKernel, LearnedConv, LearnedDeconv };

std::string to_string(DecoderVariant variant);
DecoderVariant decoder_variant_from_string(const std::string& name);

enum class Activation { Relu, Identity };

/// How the reverse pass treats the channel normalization. Full differentiates
/// through the mean and the standard deviation; FrozenStd treats the standard
/// deviation as a constant.
enum class NormDerivative { Full, FrozenStd };

/// One-dimensional deep decoder: per layer a channel mix, a fixed or learned
/// convolution (with 2x upsampling for two of the variants), ReLU and channel
/// normalization; the output is a plain linear combination of channels.
struct DecoderConfig {
    int d = 2;
    int k = 64;
    int n_out = 256;
    DecoderVariant variant = DecoderVariant::BilinearUpsample;
    int filter_width = 3;              // learned variants only
    std::uint64_t seed = 0;
    std::optional<double> omega;        // hidden-layer init std; default 1/sqrt(k), or 1/sqrt(k w) when learned
    std::optional<double> output_scale; // output weight init std; default 0.1/sqrt(k)
    Activation activation = Activation::Relu;

    void validate() const;
    bool upsamples() const;
    bool learned() const;
    /// Input length n_0.
    int input_length() const;
    int taps() const { return learned() ? filter_width : 1; }
    double resolved_omega() const;
    double resolved_output_scale() const;
};

/// d k^2 for the fixed-kernel variants, d k^2 w for the learned ones.
long layer_parameter_count(const DecoderConfig& cfg);
/// Layer parameters plus the k output weights.
long parameter_count(const DecoderConfig& cfg);

struct DecoderState {
    DecoderConfig config;
    Matrix input;               // B_0, n_0 x k, fixed
    std::vector<Matrix> layers; // layer i: (taps k) x k, tap t occupies rows t k .. t k + k - 1
    Vector output;              // C_{d+1}, length k
};

DecoderState init_decoder(const DecoderConfig& cfg);

/// Everything the reverse pass needs from a forward pass.
struct DecoderCache {
    std::vector<Matrix> inputs;    // X_i: layer input after optional upsampling
    std::vector<Matrix> pre;       // A_i: after channel mix and convolution
    std::vector<Matrix> post;      // Z_i: after the activation
    std::vector<Vector> mean;
    std::vector<Vector> std_dev;   // population std per channel
    std::vector<Matrix> normalized; // B_i
    Vector out;
};

constexpr double kChannelNormEps = 1e-6;

/// Per-channel (x - mean) / (std + 1e-6).
Matrix channel_normalize(const Matrix& z, Vector* mean = nullptr, Vector* std_dev = nullptr);
Matrix channel_normalize_backward(const Matrix& grad, const Matrix& z, const Vector& mean, const Vector& std_dev,
                                  NormDerivative mode);

/// Zero insertion: x -> (x_0, 0, x_1, 0, ...), per column.
Matrix zero_insert_upsample(const Matrix& x);
/// Circular convolution of every column with the taps (0.5, 1, 0.5).
Matrix interpolate(const Matrix& x);
Matrix interpolate_transpose(const Matrix& x);

DecoderCache decoder_forward_cached(const DecoderState& state);
Vector decoder_forward(const DecoderState& state);

struct DecoderGradient {
    std::vector<Matrix> layers;
    Vector output;
};

/// Reverse pass for an arbitrary output cotangent g = dL/dx.
DecoderGradient decoder_backward(const DecoderState& state, const DecoderCache& cache, const Vector& g,
                                 NormDerivative mode = NormDerivative::Full);
/// Gradient of 1/2 ||y - x||^2.
DecoderGradient decoder_gradient(const DecoderState& state, const Vector& y,
                                 NormDerivative mode = NormDerivative::Full);

/// Parameters in a fixed order: layer 1 (row-major), ..., layer d, output.
Vector flatten(const DecoderGradient& g);
Vector flatten_parameters(const DecoderState& state);
void set_parameters(DecoderState& state, const Vector& flat);

/// Dense n_out x #params Jacobian, one reverse pass per row.
Matrix decoder_jacobian(const DecoderState& state, double budget = 1e8);

struct DecoderFit {
    FitTrace trace;
    DecoderState final_state;
};

/// Plain gradient descent. Records carry per-layer relative drift
/// ||C_i - C_i^0|| / ||C_i^0||.
DecoderFit decoder_fit(const DecoderState& start, const Vector& y, const GDConfig& gd,
                       const StoppingRule& stop = StoppingRule{StoppingRule::Kind::Fixed, -1, 0, 0.0},
                       const std::optional<Vector>& truth = std::nullopt);

} // namespace specbias
