#pragma once

#include "specbias/fit_trace.hpp"
#include "specbias/spectral.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace specbias {

/// Two-layer convolutional generator G(C) = ReLU(U C) v with a fixed balanced
/// sign vector v.
struct GeneratorConfig {
    int n = 0;
    int k = 0;
    Kernel kernel;
    double omega = 1.0; // std of the iid Gaussian initialization
    std::uint64_t seed = 0;

    void validate() const;
};

/// Initialization scale ||y|| / (sqrt(n) * ||U||).
double default_omega(double y_norm, int n, double beta);

struct GeneratorState {
    RowMatrix weights;  // C, n x k
    Vector signs;       // v: +1/sqrt(k) then -1/sqrt(k)
    std::shared_ptr<const CirculantOperator> op;

    int n() const { return static_cast<int>(weights.rows()); }
    int k() const { return static_cast<int>(weights.cols()); }
};

Vector balanced_signs(int k);

GeneratorState init_generator(const GeneratorConfig& cfg);

/// Same architecture, explicit weights.
GeneratorState make_state(std::shared_ptr<const CirculantOperator> op, RowMatrix weights);

/// Pre-activations U C.
RowMatrix preactivations(const GeneratorState& state);

Vector forward(const GeneratorState& state);
double loss(const GeneratorState& state, const Vector& y);

/// Gradient of 1/2 ||y - G(C)||^2 with respect to C. ReLU'(0) is taken as 0.
RowMatrix gradient(const GeneratorState& state, const Vector& y);

/// J^T(C) applied to a vector r, reshaped to n x k. gradient() is this with
/// r = G(C) - y.
RowMatrix jacobian_transpose_apply(const GeneratorState& state, const RowMatrix& pre, const Vector& r);

struct GeneratorFit {
    FitTrace trace;
    GeneratorState final_state; // state at trace.stop_iter
};

/// Constant-step gradient descent C <- C - eta grad L(C).
GeneratorFit fit(const GeneratorState& start, const Vector& y, const GDConfig& gd, const StoppingRule& stop,
                 const std::optional<Vector>& truth = std::nullopt);

} // namespace specbias
