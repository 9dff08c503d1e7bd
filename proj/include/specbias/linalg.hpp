#pragma once

#include "specbias/spectral.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace specbias {

/// Largest singular value via a dense SVD.
double operator_norm_dense(const Matrix& a);

struct PowerIterationResult {
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Spectral norm of an operator given only A x and A^T y products. Runs power
/// iteration on A^T A until the estimate moves by less than `tolerance`
/// (relative).
PowerIterationResult operator_norm_power(const std::function<Vector(const Vector&)>& apply,
                                         const std::function<Vector(const Vector&)>& apply_transpose,
                                         Eigen::Index cols, double tolerance = 1e-8,
                                         int max_iterations = 10000, std::uint64_t seed = 0);

/// Spectral norm of a symmetric matrix, max |lambda|.
double symmetric_operator_norm(const Matrix& s);

/// Eigen-decomposition with eigenvalues sorted in descending order.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;
};
SymmetricEigen symmetric_eigen_descending(const Matrix& s);

/// Seeded source of iid standard normals. One engine per owner, never shared.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return dist_(engine_); }
    Vector vector(Eigen::Index n, double std_dev = 1.0);
    RowMatrix matrix(Eigen::Index rows, Eigen::Index cols, double std_dev = 1.0);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

double median(std::vector<double> values);

} // namespace specbias
