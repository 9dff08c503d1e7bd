#pragma once

#include "specbias/fit_trace.hpp"
#include "specbias/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace specbias {

/// Orthonormal directions w_i with weights sigma_i and a step size: the data
/// that fixes linear gradient-descent dynamics. The basis is either the
/// trigonometric system (FFT-backed) or an explicit orthonormal matrix.
class SpectralSystem {
public:
    SpectralSystem(TrigBasis basis, Vector sigma, double eta);
    SpectralSystem(Matrix basis, Vector sigma, double eta);

    /// Left singular vectors and singular values of J (zero-padded to n).
    static SpectralSystem from_matrix(const Matrix& j, double eta);

    int size() const { return static_cast<int>(sigma_.size()); }
    const Vector& sigma() const { return sigma_; }
    double eta() const { return eta_; }

    Vector analyze(const Vector& y) const;
    Vector synthesize(const Vector& coefficients) const;
    Vector basis_vector(int index) const; // 1-based

    /// (1 - eta sigma_i^2)^tau for every i.
    Vector contraction(int tau) const;

private:
    std::optional<TrigBasis> trig_;
    Matrix explicit_;
    Vector sigma_;
    double eta_;
};

/// (1 - x)^tau evaluated through exp(tau log1p(-x)) when 0 <= x < 1.
double contraction_factor(double x, int tau);

/// r_tau = sum_i w_i <w_i, y> (1 - eta sigma_i^2)^tau.
Vector linear_residual(const SpectralSystem& sys, const Vector& y, int tau);

/// Literal gradient descent c <- c - eta J^T (J c - y) from c = 0; returns
/// y - J c_tau. Brute-force reference for small problems only.
Vector linear_gd_iterate_oracle(const Matrix& j, const Vector& y, double eta, int tau);

/// Same iteration, returning the parameter trajectory distance ||c_tau - c_0||.
double linear_gd_parameter_drift(const Matrix& j, const Vector& y, double eta, int tau);

struct ErrorDecomposition {
    double signal_term = 0.0;
    double noise_term = 0.0;
    double total_bound = 0.0;
};

/// Signal/noise split of the linear-model reconstruction error after tau steps
/// for a signal x in span{w_1..w_p} observed with noise z.
ErrorDecomposition error_decomposition(const SpectralSystem& sys, const Vector& x, const Vector& z, int p,
                                       int tau);

/// floor(log(1 - sqrt(p/n)) / log(1 - eta sigma_{p+1}^2)), at least 1.
int stopping_time(int p, int n, double eta, double sigma_p_plus_1);

/// (1 - eta sigma_p^2)^tau ||x|| + varsigma sqrt(2p/n) + epsilon ||y||.
double denoising_bound(double x_norm, int p, int n, double varsigma, double eta, double sigma_p, int tau,
                       double epsilon, double y_norm);

/// ||theta_tau - theta_0|| of the linearized iterates given the coefficients
/// <w_i, r_0>.
double param_drift(const SpectralSystem& sys, const Vector& r0_coefficients, int tau);

struct TheoryInputs {
    int n = 0;
    int k = 0;
    double xi = 0.0;
    double delta = 0.05;
    double alpha = 0.0; // smallest singular value of the reference Jacobian
    double beta = 0.0;  // ||U||
    double eta = 0.0;
    int max_iters = 1;  // T
    double y_norm = 0.0;
    double r0_norm = 0.0;
};

struct TheoryParams {
    TheoryInputs inputs;
    double epsilon0 = 0.0;
    double epsilon = 0.0;
    double omega = 0.0;
    double radius = 0.0;      // R
    double required_k = 0.0;  // channel condition with its absolute constant set to 1
    bool required_k_constant_unspecified = true;
    std::vector<std::string> flags;

    /// 2 (beta / alpha^2) (epsilon0 + epsilon) ||r0||.
    double residual_gap_bound() const;
};

TheoryParams theory_params(const TheoryInputs& in);

/// Upper end of the admissible iteration range, 2^5 beta^2 / (eta xi^2 alpha^4).
double max_admissible_iters(double xi, double alpha, double beta, double eta);

struct LinearizationGap {
    std::vector<int> iters;
    std::vector<double> predicted_residual; // ||r~_tau||
    std::vector<double> observed_residual;  // ||r_tau||
    std::vector<double> gap;                // ||r_tau - r~_tau||
    double bound = 0.0;                     // NaN unless theory parameters were supplied

    double max_gap() const;
};

/// Compares the recorded nonlinear residuals with the linear prediction
/// (I - eta J J^T)^tau r0 built from `sys`. The trace must carry coefficient
/// vectors in the basis of `sys`; r0 uses the same sign convention (y - output).
LinearizationGap linearization_gap(const FitTrace& trace, const SpectralSystem& sys, const Vector& r0,
                                   const std::optional<TheoryParams>& theory = std::nullopt);

/// `iter,predicted_residual,observed_residual,gap,bound`.
std::string linearization_gap_csv(const LinearizationGap& gap);

/// Gradient descent on 1/2 ||y - J c||^2 from c = 0, traced in the basis of
/// `sys`. Used to feed the linear model through the nonlinear bookkeeping.
FitTrace linear_fit_trace(const Matrix& j, const Vector& y, const SpectralSystem& sys, int iterations);

} // namespace specbias
