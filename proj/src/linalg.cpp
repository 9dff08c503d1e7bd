#include "specbias/linalg.hpp"

#include "specbias/errors.hpp"

#include <algorithm>
#include <cmath>

namespace specbias {

double operator_norm_dense(const Matrix& a)
{
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues()[0];
}

PowerIterationResult operator_norm_power(const std::function<Vector(const Vector&)>& apply,
                                         const std::function<Vector(const Vector&)>& apply_transpose,
                                         Eigen::Index cols, double tolerance, int max_iterations,
                                         std::uint64_t seed)
{
    PowerIterationResult result;
    NormalSource normals(seed);
    Vector x = normals.vector(cols);
    double x_norm = x.norm();
    if (x_norm == 0.0) {
        return result;
    }
    x /= x_norm;
    double previous = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        Vector y = apply_transpose(apply(x));
        const double growth = y.norm();
        result.iterations = it;
        if (growth == 0.0) {
            result.norm = 0.0;
            result.converged = true;
            return result;
        }
        const double estimate = std::sqrt(growth);
        x = y / growth;
        if (std::abs(estimate - previous) <= tolerance * estimate) {
            result.norm = estimate;
            result.converged = true;
            return result;
        }
        previous = estimate;
        result.norm = estimate;
    }
    return result;
}

double symmetric_operator_norm(const Matrix& s)
{
    require(s.rows() == s.cols(), "symmetric_operator_norm: matrix must be square");
    if (s.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

SymmetricEigen symmetric_eigen_descending(const Matrix& s)
{
    require(s.rows() == s.cols(), "symmetric_eigen_descending: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition failed");
    }
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

Vector NormalSource::vector(Eigen::Index n, double std_dev)
{
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = std_dev * dist_(engine_);
    }
    return v;
}

RowMatrix NormalSource::matrix(Eigen::Index rows, Eigen::Index cols, double std_dev)
{
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = std_dev * dist_(engine_);
        }
    }
    return m;
}

double median(std::vector<double> values)
{
    require(!values.empty(), "median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

} // namespace specbias
