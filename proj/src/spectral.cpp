#include "specbias/spectral.hpp"

#include "specbias/errors.hpp"
#include "specbias/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace specbias {
namespace {

constexpr double kUnitTolerance = 1e-12;

void require_even(int n, const char* what)
{
    if (n <= 0 || n % 2 != 0) {
        throw InvalidArgument(std::string(what) + ": dimension must be a positive even integer, got " +
                              std::to_string(n));
    }
}

int wrap(int i, int n)
{
    const int r = i % n;
    return r < 0 ? r + n : r;
}

} // namespace

std::string to_string(KernelPreset preset)
{
    switch (preset) {
    case KernelPreset::Delta:
        return "delta";
    case KernelPreset::Triangular:
        return "triangular";
    case KernelPreset::Gaussian:
        return "gaussian";
    case KernelPreset::Custom:
        return "custom";
    }
    return "custom";
}

KernelPreset kernel_preset_from_string(const std::string& name)
{
    if (name == "delta") {
        return KernelPreset::Delta;
    }
    if (name == "triangular") {
        return KernelPreset::Triangular;
    }
    if (name == "gaussian") {
        return KernelPreset::Gaussian;
    }
    if (name == "custom") {
        return KernelPreset::Custom;
    }
    throw InvalidArgument("unknown kernel preset '" + name + "'");
}

Kernel::Kernel(Vector taps, KernelPreset preset, KernelParams params)
    : taps_(std::move(taps)), preset_(preset), params_(params)
{
    require_even(static_cast<int>(taps_.size()), "kernel");
    require(taps_.allFinite(), "kernel: taps must be finite");
    require(taps_.cwiseAbs().maxCoeff() > 0.0, "kernel: the zero filter is not a valid kernel");
}

bool Kernel::is_symmetric() const
{
    const int n = size();
    const double scale = taps_.cwiseAbs().maxCoeff();
    for (int j = 1; j < n; ++j) {
        if (std::abs(taps_[j] - taps_[n - j]) > kUnitTolerance * scale) {
            return false;
        }
    }
    return true;
}

std::string Kernel::describe() const
{
    std::ostringstream os;
    os << to_string(preset_);
    if (preset_ == KernelPreset::Triangular) {
        os << "(width=" << params_.width << ")";
    } else if (preset_ == KernelPreset::Gaussian) {
        os << "(std=" << params_.std_dev << ")";
    }
    os << ", n=" << size();
    return os.str();
}

Kernel make_kernel(KernelPreset preset, const KernelParams& params, int n)
{
    require_even(n, "make_kernel");
    require(n >= 4, "make_kernel: n must be at least 4");
    Vector u = Vector::Zero(n);
    switch (preset) {
    case KernelPreset::Delta:
        u[0] = 1.0;
        break;
    case KernelPreset::Triangular: {
        const int width = params.width;
        require(width > 0 && width % 2 == 1, "make_kernel: triangular width must be a positive odd integer");
        require(width < n, "make_kernel: triangular width must be smaller than n");
        const int half = (width + 1) / 2;
        for (int d = -(half - 1); d <= half - 1; ++d) {
            u[wrap(d, n)] = 1.0 - std::abs(d) / static_cast<double>(half);
        }
        break;
    }
    case KernelPreset::Gaussian: {
        const double s = params.std_dev;
        require(std::isfinite(s) && s > 0.0, "make_kernel: gaussian std must be finite and positive");
        for (int j = 0; j < n; ++j) {
            const double d = std::min(j, n - j);
            u[j] = std::exp(-d * d / (2.0 * s * s));
        }
        break;
    }
    case KernelPreset::Custom:
        throw InvalidArgument("make_kernel: custom kernels are built from explicit taps");
    }
    return Kernel(std::move(u), preset, params);
}

Vector circular_convolve(const Vector& a, const Vector& b)
{
    require(a.size() == b.size(), "circular_convolve: length mismatch");
    require(a.allFinite() && b.allFinite(), "circular_convolve: entries must be finite");
    const auto n = static_cast<std::size_t>(a.size());
    if (n == 0) {
        return Vector();
    }
    auto fa = fft::forward_real({a.data(), n});
    const auto fb = fft::forward_real({b.data(), n});
    for (std::size_t f = 0; f < n; ++f) {
        fa[f] *= fb[f];
    }
    const auto back = fft::backward(fa);
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < n; ++l) {
        out[static_cast<Eigen::Index>(l)] = back[l].real() / static_cast<double>(n);
    }
    return out;
}

CirculantOperator::CirculantOperator(Kernel kernel) : kernel_(std::move(kernel))
{
    const Vector& u = kernel_.taps();
    spectrum_ = fft::forward_real({u.data(), static_cast<std::size_t>(u.size())});
    for (int m = 0; m < u.size(); ++m) {
        if (u[m] != 0.0) {
            taps_.push_back({m, u[m]});
        }
    }
}

Vector CirculantOperator::apply(const Vector& x) const
{
    const int n = size();
    require(x.size() == n, "CirculantOperator::apply: dimension mismatch");
    Vector out = Vector::Zero(n);
    for (const auto& tap : taps_) {
        for (int i = 0; i < n; ++i) {
            out[i] += tap.value * x[wrap(i - tap.offset, n)];
        }
    }
    return out;
}

Vector CirculantOperator::apply_transpose(const Vector& x) const
{
    const int n = size();
    require(x.size() == n, "CirculantOperator::apply_transpose: dimension mismatch");
    Vector out = Vector::Zero(n);
    for (const auto& tap : taps_) {
        for (int i = 0; i < n; ++i) {
            out[i] += tap.value * x[wrap(i + tap.offset, n)];
        }
    }
    return out;
}

RowMatrix CirculantOperator::apply(const RowMatrix& x) const
{
    RowMatrix out;
    apply(x, out);
    return out;
}

RowMatrix CirculantOperator::apply_transpose(const RowMatrix& x) const
{
    RowMatrix out;
    apply_transpose(x, out);
    return out;
}

void CirculantOperator::apply(const RowMatrix& x, RowMatrix& out) const
{
    const int n = size();
    require(x.rows() == n, "CirculantOperator::apply: row count mismatch");
    require(&x != &out, "CirculantOperator::apply: output must not alias the input");
    out.setZero(n, x.cols());
    for (int i = 0; i < n; ++i) {
        auto row = out.row(i);
        for (const auto& tap : taps_) {
            row += tap.value * x.row(wrap(i - tap.offset, n));
        }
    }
}

void CirculantOperator::apply_transpose(const RowMatrix& x, RowMatrix& out) const
{
    const int n = size();
    require(x.rows() == n, "CirculantOperator::apply_transpose: row count mismatch");
    require(&x != &out, "CirculantOperator::apply_transpose: output must not alias the input");
    out.setZero(n, x.cols());
    for (int i = 0; i < n; ++i) {
        auto row = out.row(i);
        for (const auto& tap : taps_) {
            row += tap.value * x.row(wrap(i + tap.offset, n));
        }
    }
}

Matrix CirculantOperator::dense() const
{
    const int n = size();
    const Vector& u = kernel_.taps();
    Matrix out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = u[wrap(i - j, n)];
        }
    }
    return out;
}

double CirculantOperator::frobenius_norm() const
{
    return std::sqrt(static_cast<double>(size())) * kernel_.taps().norm();
}

double operator_norm(const CirculantOperator& op)
{
    double best = 0.0;
    for (const auto& c : op.spectrum()) {
        best = std::max(best, std::abs(c));
    }
    return best;
}

TrigBasis::TrigBasis(int n) : n_(n)
{
    require_even(n, "TrigBasis");
}

Vector TrigBasis::vector(int index) const
{
    return trig_vector(n_, index);
}

Matrix TrigBasis::matrix() const
{
    Matrix w(n_, n_);
    for (int i = 1; i <= n_; ++i) {
        w.col(i - 1) = vector(i);
    }
    return w;
}

int TrigBasis::frequency(int index) const
{
    require(index >= 1 && index <= n_, "TrigBasis::frequency: index out of range");
    return std::min(index - 1, n_ - index + 1);
}

Vector TrigBasis::analyze(const Vector& y) const
{
    require(y.size() == n_, "analyze: dimension mismatch");
    const auto spec = fft::forward_real({y.data(), static_cast<std::size_t>(n_)});
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
    const double scale = std::sqrt(2.0) * inv_sqrt_n;
    const int half = n_ / 2;
    Vector c(n_);
    c[0] = spec[0].real() * inv_sqrt_n;
    for (int f = 1; f < half; ++f) {
        c[f] = scale * spec[f].real();
    }
    c[half] = spec[half].real() * inv_sqrt_n;
    for (int f = half + 1; f < n_; ++f) {
        c[f] = -scale * spec[f].imag();
    }
    return c;
}

Vector TrigBasis::synthesize(const Vector& coefficients) const
{
    require(coefficients.size() == n_, "synthesize: dimension mismatch");
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
    const double scale = std::sqrt(2.0) * inv_sqrt_n;
    const int half = n_ / 2;
    std::vector<fft::Complex> z(static_cast<std::size_t>(n_));
    z[0] = coefficients[0] * inv_sqrt_n;
    for (int f = 1; f < half; ++f) {
        z[f] = scale * coefficients[f];
    }
    z[half] = coefficients[half] * inv_sqrt_n;
    for (int f = half + 1; f < n_; ++f) {
        z[f] = fft::Complex(0.0, -scale * coefficients[f]);
    }
    const auto y = fft::backward(z);
    Vector out(n_);
    for (int j = 0; j < n_; ++j) {
        out[j] = y[j].real();
    }
    return out;
}

std::vector<int> TrigBasis::indices_by_frequency() const
{
    std::vector<int> idx(n_);
    std::iota(idx.begin(), idx.end(), 1);
    std::stable_sort(idx.begin(), idx.end(), [this](int a, int b) { return frequency(a) < frequency(b); });
    return idx;
}

Vector trig_vector(int n, int index)
{
    require_even(n, "trig_vector");
    require(index >= 1 && index <= n, "trig_vector: index must lie in 1..n");
    const int i = index - 1;
    const int half = n / 2;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    Vector w(n);
    for (int j = 0; j < n; ++j) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(j) * i) % n) / n;
        double value;
        if (i == 0) {
            value = 1.0;
        } else if (i < half) {
            value = std::sqrt(2.0) * std::cos(angle);
        } else if (i == half) {
            value = (j % 2 == 0) ? 1.0 : -1.0;
        } else {
            value = std::sqrt(2.0) * std::sin(angle);
        }
        w[j] = value * inv_sqrt_n;
    }
    return w;
}

double g_scalar(double t)
{
    if (!(std::abs(t) <= 1.0 + kUnitTolerance)) {
        throw InvalidArgument("g_scalar: argument " + std::to_string(t) +
                              " is not a valid normalized autocorrelation");
    }
    t = std::clamp(t, -1.0, 1.0);
    return 0.5 * (1.0 - std::acos(t) / std::numbers::pi) * t;
}

DualKernel dual_kernel(const Kernel& kernel)
{
    const Vector& u = kernel.taps();
    const int n = kernel.size();
    const double norm = u.norm();
    require(norm > 0.0, "dual_kernel: kernel has zero norm");

    Vector rho = circular_convolve(u, u) / (norm * norm);
    for (int l = 0; l < n; ++l) {
        if (!(std::abs(rho[l]) <= 1.0 + kUnitTolerance)) {
            throw NumericalError("dual_kernel: normalized autocorrelation out of [-1, 1] at lag " +
                                 std::to_string(l));
        }
        rho[l] = g_scalar(rho[l]);
    }
    const auto spec = fft::forward_real({rho.data(), static_cast<std::size_t>(n)});

    DualKernel out;
    out.sigma.resize(n);
    for (int i = 1; i <= n; ++i) {
        out.sigma[i - 1] = norm * std::sqrt(std::abs(spec[static_cast<std::size_t>(i - 1)]));
    }
    out.asymmetric_kernel = !kernel.is_symmetric();
    if (out.asymmetric_kernel) {
        out.diagnostics.push_back(
            "asymmetric kernel: u*u differs from the row autocorrelation of U, so sigma^2 is not the "
            "spectrum of the expected Jacobian Gram; use the dense eigen-oracle instead");
    }
    return out;
}

double low_frequency_mass(const Vector& sigma, int count)
{
    const int n = static_cast<int>(sigma.size());
    require(count >= 0 && count <= n, "low_frequency_mass: count out of range");
    const TrigBasis basis(n);
    const auto order = basis.indices_by_frequency();
    const double total = sigma.squaredNorm();
    require(total > 0.0, "low_frequency_mass: all weights are zero");
    double low = 0.0;
    for (int r = 0; r < count; ++r) {
        low += sigma[order[r] - 1] * sigma[order[r] - 1];
    }
    return low / total;
}

std::string spectrum_csv(const Vector& values, bool header)
{
    std::ostringstream os;
    os.precision(17);
    if (header) {
        os << "index,frequency,value\n";
    }
    const int n = static_cast<int>(values.size());
    for (int i = 1; i <= n; ++i) {
        os << i << ',' << std::min(i - 1, n - i + 1) << ',' << values[i - 1] << '\n';
    }
    return os.str();
}

} // namespace specbias
