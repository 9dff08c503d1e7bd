#pragma once

#include "specbias/decoder1d.hpp"
#include "specbias/generator.hpp"
#include "specbias/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace specbias {

/// Expected Jacobian Gram Sigma(U) = E[J(C) J(C)^T] over Gaussian weights.
struct SigmaMatrix {
    enum class Provenance { ClosedForm, MonteCarlo };
    Matrix values;
    Provenance provenance = Provenance::ClosedForm;
    int trials = 0;
    std::uint64_t seed = 0;
};

/// Arc-cosine kernel over the rows u_i of U:
/// 1/2 (1 - arccos(<u_i,u_j> / |u_i||u_j|) / pi) <u_i,u_j>.
SigmaMatrix sigma_closed_form(const CirculantOperator& op);
SigmaMatrix sigma_closed_form(const Matrix& u);

/// True when entry (i, j) depends only on (i - j) mod n.
bool is_circulant(const Matrix& s, double tolerance = 1e-10);

struct EigenSystem {
    Vector values;  // descending
    Matrix vectors; // column r pairs with values[r]
    std::vector<int> trig_index; // fast path only: trig index of column r
    bool fast_path = false;
};

/// Circulant inputs take the FFT path (eigenvalues from the DFT of the first
/// column, eigenvectors from the trigonometric basis) unless `force_dense`.
EigenSystem sigma_eigensystem(const SigmaMatrix& s, bool force_dense = false);

/// Eigenvalue paired with each trig index, read from the DFT of the first
/// column of a circulant matrix (entry i-1 belongs to w_i).
Vector circulant_trig_eigenvalues(const Matrix& s);

/// Dense Jacobian of the generator, n x (n k); column l n + a is dG/dC_{a l}.
Matrix dense_jacobian(const GeneratorState& state, double budget = 1e6);

/// J J^T without materializing J, through
/// J J^T = (S diag(v^2) S^T) .* (U U^T) with S = 1{U C > 0}.
Matrix jacobian_gram(const GeneratorState& state);

/// (J_a - J_b)(J_a - J_b)^T by the same identity.
Matrix jacobian_difference_gram(const GeneratorState& a, const GeneratorState& b);

/// Average of J(C) J(C)^T over `trials` draws with seeds cfg.seed + t.
SigmaMatrix mc_expected_jjt(const GeneratorConfig& cfg, int trials);

struct ConcentrationGap {
    double gap = 0.0;   // ||J J^T - Sigma(U)||
    double bound = 0.0; // ||U||^2 sqrt(log(2n/delta) sum v^4)
};

ConcentrationGap concentration_gap(const GeneratorState& state, const SigmaMatrix& sigma, double delta = 0.05);
ConcentrationGap concentration_gap(const GeneratorState& state, double delta = 0.05);

struct InitialOutputCheck {
    double bound = 0.0; // omega sqrt(8 log(2n/delta)) ||U||_F
    std::vector<double> output_norms;
    int passed = 0;
    double fraction() const;
};

/// Draws C_0 with seeds cfg.seed + t and counts ||G(C_0)|| <= bound.
InitialOutputCheck initial_output_check(const GeneratorConfig& cfg, int trials, double delta = 0.05);

/// ||J(C_a) - J(C_b)||.
double perturbation_gap(const GeneratorState& a, const GeneratorState& b);
/// 2 (k R~)^{1/3} ||U|| / sqrt(k) with R~ = ||C - C_0|| / omega.
double perturbation_rate_bound(int k, double relative_radius, double u_norm);

/// ||J^T y|| through one reverse pass.
double alignment(const GeneratorState& state, const Vector& y);
double alignment(const DecoderState& state, const Vector& y);
/// sqrt(sum_i sigma_i^2 <w_i, y>^2).
double predicted_alignment(const Vector& sigma, const Vector& y);

/// Leading left singular structure of a Jacobian at one checkpoint.
struct SpectrumSnapshot {
    int iter = 0;
    Vector singular_values;   // all n, descending
    Matrix vectors;           // top_s left singular vectors as columns
    std::vector<int> best_trig_index;
    std::vector<double> correlation; // max_j |<vec, w_j>|
};

/// From J J^T (its eigenvectors are the left singular vectors of J).
SpectrumSnapshot spectrum_from_gram(const Matrix& gram, int top_s, int iter = 0);
SpectrumSnapshot spectrum_from_jacobian(const Matrix& jacobian, int top_s, int iter = 0);

/// Generator checkpoints; the Gram identity keeps each step O(n^2 k).
std::vector<SpectrumSnapshot> svd_track(const std::vector<GeneratorState>& states, const std::vector<int>& iters,
                                        int top_s);
std::vector<SpectrumSnapshot> svd_track(const std::vector<DecoderState>& states, const std::vector<int>& iters,
                                        int top_s);

/// |<a_r, b_r>| for every rank r of two snapshots.
std::vector<double> snapshot_correlations(const SpectrumSnapshot& a, const SpectrumSnapshot& b);

/// `rank,singular_value,best_trig_index,correlation`.
std::string snapshot_csv(const SpectrumSnapshot& snapshot);

/// Dense matrix dump, one row per line.
std::string matrix_csv(const Matrix& m);

} // namespace specbias
