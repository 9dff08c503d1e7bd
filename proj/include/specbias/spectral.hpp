#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace specbias {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelPreset { Delta, Triangular, Gaussian, Custom };

std::string to_string(KernelPreset preset);
KernelPreset kernel_preset_from_string(const std::string& name);

struct KernelParams {
    int width = 3;        // triangular: odd support width
    double std_dev = 1.0; // gaussian
};

/// Convolution filter of length n, stored as the first column of its
/// circulant. Index 0 is the filter center; negative offsets wrap to n-1, n-2...
class Kernel {
public:
    Kernel(Vector taps, KernelPreset preset = KernelPreset::Custom, KernelParams params = {});

    int size() const { return static_cast<int>(taps_.size()); }
    const Vector& taps() const { return taps_; }
    KernelPreset preset() const { return preset_; }
    const KernelParams& params() const { return params_; }

    /// True when u_j == u_{n-j} for all j (within 1e-12 of the largest tap).
    bool is_symmetric() const;
    std::string describe() const;

private:
    Vector taps_;
    KernelPreset preset_;
    KernelParams params_;
};

Kernel make_kernel(KernelPreset preset, const KernelParams& params, int n);

/// (a (*) b)_l = sum_k a_k b_{(l-k) mod n}, computed with the FFT.
Vector circular_convolve(const Vector& a, const Vector& b);

/// Circulant operator U with U_{ij} = u_{(i-j) mod n}.
class CirculantOperator {
public:
    explicit CirculantOperator(Kernel kernel);

    int size() const { return kernel_.size(); }
    const Kernel& kernel() const { return kernel_; }
    const std::vector<std::complex<double>>& spectrum() const { return spectrum_; }

    Vector apply(const Vector& x) const;
    Vector apply_transpose(const Vector& x) const;
    /// Applies U (or U^T) to every column of an n x k matrix.
    RowMatrix apply(const RowMatrix& x) const;
    RowMatrix apply_transpose(const RowMatrix& x) const;
    /// Column-wise application into a caller-owned buffer (resized if needed).
    void apply(const RowMatrix& x, RowMatrix& out) const;
    void apply_transpose(const RowMatrix& x, RowMatrix& out) const;

    Matrix dense() const;
    double frobenius_norm() const;

private:
    struct Tap {
        int offset;
        double value;
    };

    Kernel kernel_;
    std::vector<std::complex<double>> spectrum_;
    std::vector<Tap> taps_;
};

/// max_f |(F u)_f|, the spectral norm of the circulant.
double operator_norm(const CirculantOperator& op);

/// The orthonormal cosine/sine system w_1..w_n (1-based indices). Index i has
/// DFT frequency i-1; indices 2..n/2 are cosines, n/2+1 is the alternating
/// vector, n/2+2..n are sines.
class TrigBasis {
public:
    explicit TrigBasis(int n);

    int size() const { return n_; }
    Vector vector(int index) const;
    Matrix matrix() const;

    /// Frequency min(i-1, n-i+1) of trig index i.
    int frequency(int index) const;
    /// DFT bin paired with trig index i.
    int bin(int index) const { return index - 1; }

    /// (<w_1,y>, ..., <w_n,y>) via one FFT.
    Vector analyze(const Vector& y) const;
    Vector synthesize(const Vector& coefficients) const;

    /// Trig indices sorted by increasing frequency, cosine before sine.
    std::vector<int> indices_by_frequency() const;

private:
    int n_;
};

Vector trig_vector(int n, int index);

/// g(t) = (1 - arccos(t)/pi) t / 2.
double g_scalar(double t);

struct DualKernel {
    Vector sigma;            // indexed like TrigBasis, entry i-1 holds sigma_i
    bool asymmetric_kernel;  // u*u differs from the row autocorrelation of U
    std::vector<std::string> diagnostics;
};

DualKernel dual_kernel(const Kernel& kernel);

/// Fraction of sum sigma_i^2 carried by the `count` lowest-frequency indices.
double low_frequency_mass(const Vector& sigma, int count);

/// CSV rows `index,frequency,value`; index is 1-based (trig order for dual
/// kernels, tap offset + 1 for kernels).
std::string spectrum_csv(const Vector& values, bool header = true);

} // namespace specbias
