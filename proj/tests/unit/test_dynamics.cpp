#include "oracles.hpp"

#include "specbias/dynamics.hpp"
#include "specbias/errors.hpp"
#include "specbias/generator.hpp"

#include <gtest/gtest.h>

using namespace specbias;

namespace {

SpectralSystem identity_system(const Vector& sigma, double eta)
{
    return SpectralSystem(Matrix::Identity(sigma.size(), sigma.size()), sigma, eta);
}

} // namespace

TEST(LinearResidual, IsotropicContraction)
{
    const auto sys = SpectralSystem(TrigBasis(8), Vector::Ones(8), 0.5);
    std::mt19937_64 rng(1);
    const Vector y = oracle::random_vector(rng, 8);
    EXPECT_LE((linear_residual(sys, y, 3) - 0.125 * y).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((linear_residual(sys, y, 0) - y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LinearResidual, TwoDimensionalExample)
{
    Vector sigma(2);
    sigma << 2.0, 1.0;
    const auto sys = identity_system(sigma, 0.1);
    const Vector r = linear_residual(sys, Vector::Ones(2), 3);
    EXPECT_NEAR(r[0], 0.216, 1e-14);
    EXPECT_NEAR(r[1], 0.729, 1e-14);
    Matrix j = Matrix::Zero(2, 2);
    j(0, 0) = 2.0;
    j(1, 1) = 1.0;
    EXPECT_LE((oracle::matrix_power_residual(j, Vector::Ones(2), 0.1, 3) - r).norm(), 1e-14);
}

TEST(LinearResidual, MatchesLiteralIterationOnRandomInstances)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 40);
        const int m = 2 + static_cast<int>(rng() % 40);
        const Matrix j = oracle::random_matrix(rng, n, m);
        const Vector y = oracle::random_vector(rng, n);
        const double eta = 1.0 / std::pow(oracle::spectral_norm(j), 2);
        const auto sys = SpectralSystem::from_matrix(j, eta);
        for (int tau : {0, 1, 7, 60, 200}) {
            const Vector closed = linear_residual(sys, y, tau);
            EXPECT_LE((closed - linear_gd_iterate_oracle(j, y, eta, tau)).norm(), 1e-8 * y.norm());
            EXPECT_LE((closed - oracle::matrix_power_residual(j, y, eta, tau)).norm(), 1e-8 * y.norm());
        }
    }
}

TEST(LinearGdOracle, Examples)
{
    std::mt19937_64 rng(3);
    const Vector y = oracle::random_vector(rng, 5);
    EXPECT_LE(linear_gd_iterate_oracle(Matrix::Identity(5, 5), y, 1.0, 1).norm(), 1e-15);
    EXPECT_EQ(linear_gd_iterate_oracle(Matrix::Zero(5, 3), y, 0.3, 9), y);
    EXPECT_THROW(linear_gd_iterate_oracle(Matrix::Zero(65, 3), Vector::Zero(65), 0.1, 1), InvalidArgument);
}

TEST(SpectralSystem, RejectsBadInput)
{
    EXPECT_THROW(SpectralSystem(TrigBasis(8), Vector::Ones(6), 0.1), InvalidArgument);
    EXPECT_THROW(SpectralSystem(TrigBasis(8), -Vector::Ones(8), 0.1), InvalidArgument);
    EXPECT_THROW(SpectralSystem(Matrix::Ones(3, 3), Vector::Ones(3), 0.1), InvalidArgument);
}

TEST(ContractionFactor, Stable)
{
    EXPECT_DOUBLE_EQ(contraction_factor(0.3, 0), 1.0);
    EXPECT_NEAR(contraction_factor(0.5, 10), std::pow(0.5, 10), 1e-17);
    EXPECT_NEAR(contraction_factor(1e-12, 1000000), std::exp(-1e-6), 1e-15);
}

TEST(ErrorDecomposition, LimitsAndDirectSum)
{
    const int n = 16;
    const int p = 2;
    const Vector sigma = dual_kernel(make_kernel(KernelPreset::Triangular, {3, 1.0}, n)).sigma;
    const double eta = 0.5 / (sigma.maxCoeff() * sigma.maxCoeff());
    const auto sys = SpectralSystem(TrigBasis(n), sigma, eta);
    std::mt19937_64 rng(4);
    const Vector x = 1.3 * oracle::trig(n, 1) - 0.4 * oracle::trig(n, 2);
    const Vector z = 0.2 * oracle::random_vector(rng, n);

    const auto zero = error_decomposition(sys, x, z, p, 0);
    EXPECT_NEAR(zero.signal_term, x.norm(), 1e-14);
    EXPECT_NEAR(zero.noise_term, 0.0, 1e-15);

    const int tau = 12;
    const auto d = error_decomposition(sys, x, z, p, tau);
    const Matrix w = oracle::trig_basis_matrix(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = std::pow(1.0 - eta * sigma[i] * sigma[i], tau);
        acc += std::pow((f - 1.0) * w.col(i).dot(z), 2);
    }
    EXPECT_NEAR(d.noise_term, std::sqrt(acc), 1e-12);
    EXPECT_NEAR(d.signal_term, std::pow(1.0 - eta * sigma[p - 1] * sigma[p - 1], tau) * x.norm(), 1e-12);
    EXPECT_DOUBLE_EQ(d.total_bound, d.signal_term + d.noise_term);

    const auto late = error_decomposition(sys, x, z, p, 100000);
    EXPECT_NEAR(late.signal_term, 0.0, 1e-12);
    EXPECT_NEAR(late.noise_term, z.norm(), 1e-6);

    EXPECT_THROW(error_decomposition(sys, oracle::trig(n, 5), z, p, 3), InvalidArgument);
}

TEST(StoppingTime, Examples)
{
    EXPECT_EQ(stopping_time(2, 8, 0.5, 1.0), 1);
    EXPECT_EQ(stopping_time(2, 8, 0.3, 1.0), static_cast<int>(std::floor(std::log(0.5) / std::log(0.7))));
    EXPECT_EQ(stopping_time(8, 256, 0.001, 1.0),
              static_cast<int>(std::floor(std::log(1.0 - std::sqrt(8.0 / 256.0)) / std::log(1.0 - 0.001))));
    EXPECT_THROW(stopping_time(2, 8, 1.0, 1.0), InvalidArgument);
    EXPECT_THROW(stopping_time(2, 8, 1e-16, 1.0), InvalidArgument);
    EXPECT_THROW(stopping_time(8, 8, 0.1, 1.0), InvalidArgument);
}

TEST(DenoisingBound, Examples)
{
    EXPECT_DOUBLE_EQ(denoising_bound(2.5, 3, 16, 0.0, 0.1, 1.0, 0, 0.0, 4.0), 2.5);
    EXPECT_DOUBLE_EQ(denoising_bound(0.0, 8, 256, 1.0, 0.1, 1.0, 5, 0.0, 1.0), 0.25);
    const double expected = std::pow(1.0 - 0.1 * 4.0, 3) * 2.0 + 0.5 * std::sqrt(2.0 * 4 / 32.0) + 0.1 * 3.0;
    EXPECT_NEAR(denoising_bound(2.0, 4, 32, 0.5, 0.1, 2.0, 3, 0.1, 3.0), expected, 1e-14);
}

TEST(ParamDrift, LimitsAndLiteralIteration)
{
    Matrix j(2, 2);
    j << 2.0, 0.5, 0.0, 1.0;
    Vector y(2);
    y << 1.0, -2.0;
    const double eta = 0.15;
    const auto sys = SpectralSystem::from_matrix(j, eta);
    const Vector c0 = sys.analyze(y);
    EXPECT_DOUBLE_EQ(param_drift(sys, c0, 0), 0.0);
    for (int tau : {1, 5, 40}) {
        EXPECT_NEAR(param_drift(sys, c0, tau), linear_gd_parameter_drift(j, y, eta, tau), 1e-8);
    }
    EXPECT_NEAR(param_drift(sys, c0, 100000), j.inverse().operator*(y).norm(), 1e-10);

    Vector sigma(2);
    sigma << 1.0, 0.0;
    EXPECT_THROW(param_drift(identity_system(sigma, 0.1), Vector::Ones(2), 3), InvalidArgument);
}

TEST(TheoryParams, FormulasAgainstScalarEvaluation)
{
    TheoryInputs in;
    in.n = 256;
    in.k = 4096;
    in.delta = 0.01;
    in.xi = 1.0 / std::sqrt(32.0 * std::log(2.0 * 256 / 0.01));
    in.alpha = 0.3;
    in.beta = 8.0;
    in.eta = 1.0 / 64.0;
    in.max_iters = 100;
    in.y_norm = 2.0;
    in.r0_norm = 2.5;
    const auto t = theory_params(in);
    const double l = std::log(51200.0);
    EXPECT_NEAR(t.epsilon0, 8.0 * std::pow(4.0 * l / 4096.0, 0.25), 1e-12);
    EXPECT_NEAR(t.epsilon, in.xi * 0.09 / 64.0, 1e-15);
    EXPECT_NEAR(t.omega, 2.0 / (16.0 * 8.0) * in.xi * 0.09 / 64.0, 1e-15);
    const double growth = 1.0 + in.xi / 4.0 * (0.3 / 8.0) * in.eta * 100 * 64.0;
    EXPECT_NEAR(t.required_k / (256.0 * std::pow(in.xi, -8) * growth * growth * std::pow(8.0 / 0.3, 18)), 1.0,
                1e-12);
    const double radius = 2.0 * 2.5 / 0.3 + 2.0 / 0.09 * (t.epsilon0 + t.epsilon) * (1.0 + 2.0 * in.eta * 100 * 64) * 2.5;
    EXPECT_NEAR(t.radius, radius, 1e-10 * radius);
    EXPECT_NEAR(t.residual_gap_bound(), 2.0 * 8.0 / 0.09 * (t.epsilon0 + t.epsilon) * 2.5, 1e-10);
    for (double v : {t.epsilon0, t.epsilon, t.omega, t.radius}) {
        EXPECT_TRUE(std::isfinite(v) && v > 0.0);
    }
    EXPECT_TRUE(t.required_k_constant_unspecified);
}

TEST(TheoryParams, LimitsAndFlags)
{
    TheoryInputs in;
    in.n = 64;
    in.k = 128;
    in.xi = 0.01;
    in.alpha = 2.0;
    in.beta = 2.0;
    in.eta = 0.1;
    in.max_iters = 10;
    in.y_norm = 1.0;
    in.r0_norm = 1.0;
    EXPECT_NEAR(theory_params(in).epsilon, 0.01 * 2.0 / 8.0, 1e-16);

    in.k = 1 << 30;
    const double large = theory_params(in).epsilon0;
    in.k = 128;
    EXPECT_LT(large, theory_params(in).epsilon0 / 50.0);

    in.eta = 0.5;
    const auto flagged = theory_params(in);
    const auto has = [&](const std::string& needle) {
        return std::any_of(flagged.flags.begin(), flagged.flags.end(),
                           [&](const std::string& f) { return f.find(needle) != std::string::npos; });
    };
    EXPECT_TRUE(has("eta exceeds"));
    EXPECT_TRUE(has("channel condition"));

    in.eta = 0.1;
    in.max_iters = static_cast<int>(max_admissible_iters(in.xi, in.alpha, in.beta, in.eta)) + 10;
    const auto late = theory_params(in);
    EXPECT_TRUE(std::any_of(late.flags.begin(), late.flags.end(),
                            [](const std::string& f) { return f.find("admissible") != std::string::npos; }));

    in.xi = 0.5;
    EXPECT_THROW(theory_params(in), InvalidArgument);
    in.xi = 0.01;
    in.alpha = 3.0;
    EXPECT_THROW(theory_params(in), InvalidArgument);
}

TEST(MaxAdmissibleIters, Formula)
{
    EXPECT_NEAR(max_admissible_iters(0.1, 0.5, 2.0, 0.25), 32.0 * 4.0 / (0.25 * 0.01 * 0.0625), 1e-6);
}

TEST(LinearizationGap, SelfConsistentForLinearProblem)
{
    std::mt19937_64 rng(5);
    const Matrix j = oracle::random_matrix(rng, 12, 20);
    const Vector y = oracle::random_vector(rng, 12);
    const double eta = 0.9 / std::pow(oracle::spectral_norm(j), 2);
    const auto sys = SpectralSystem::from_matrix(j, eta);
    const FitTrace trace = linear_fit_trace(j, y, sys, 60);
    const auto gap = linearization_gap(trace, sys, y);
    ASSERT_EQ(gap.iters.size(), 61u);
    EXPECT_DOUBLE_EQ(gap.gap[0], 0.0);
    EXPECT_LE(gap.max_gap(), 1e-8 * y.norm());
    EXPECT_TRUE(std::isnan(gap.bound));
    const std::string csv = linearization_gap_csv(gap);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,predicted_residual,observed_residual,gap,bound");
    EXPECT_NE(csv.find(",\n"), std::string::npos);
}

TEST(LinearizationGap, GeneratorStartsWithZeroGap)
{
    const int n = 16;
    GeneratorConfig cfg{n, 64, make_kernel(KernelPreset::Triangular, {3, 1.0}, n), 0.1, 3};
    const auto start = init_generator(cfg);
    std::mt19937_64 rng(6);
    const Vector y = oracle::random_vector(rng, n);
    const auto fitted = fit(start, y, {0.05, 20, true}, StoppingRule::fixed(20));
    const Vector r0 = y - forward(start);
    const auto sys = SpectralSystem(TrigBasis(n), dual_kernel(cfg.kernel).sigma, 0.05);
    const auto gap = linearization_gap(fitted.trace, sys, r0);
    EXPECT_NEAR(gap.gap[0], 0.0, 1e-12);
    EXPECT_EQ(gap.iters.back(), 20);

    const auto bare = fit(start, y, {0.05, 2, false}, StoppingRule::fixed(2));
    EXPECT_THROW(linearization_gap(bare.trace, sys, r0), InvalidArgument);
}
