#pragma once

#include "specbias/spectral.hpp"

#include <limits>
#include <string>
#include <vector>

namespace specbias {

struct GDConfig {
    double eta = 0.0;
    int max_iters = 1;
    bool record_spectrum = false; // store <w_i, y - output> every iteration
};

/// When gradient descent stops.
struct StoppingRule {
    enum class Kind { Fixed, Theory, OracleBest, LossThreshold };

    Kind kind = Kind::Fixed;
    int iterations = 0;         // Fixed
    int p = 0;                  // Theory: band limit of the signal
    double loss_threshold = 0;  // LossThreshold

    static StoppingRule fixed(int iterations) { return {Kind::Fixed, iterations, 0, 0.0}; }
    static StoppingRule theory(int p) { return {Kind::Theory, 0, p, 0.0}; }
    static StoppingRule oracle_best() { return {Kind::OracleBest, 0, 0, 0.0}; }
    static StoppingRule loss_below(double threshold) { return {Kind::LossThreshold, 0, 0, threshold}; }
};

struct FitRecord {
    int iter = 0;
    double loss = 0.0;
    double residual_norm = 0.0;
    double error_to_truth = std::numeric_limits<double>::quiet_NaN();
    double weight_drift = 0.0;
    Vector coefficients;            // empty unless GDConfig::record_spectrum
    std::vector<double> layer_drift; // decoder only
};

/// Per-iteration record of a gradient-descent fit. Records run from iteration
/// 0 upward without gaps; `stop_iter` is the iteration the stopping rule chose
/// (for the oracle rule the records extend past it).
struct FitTrace {
    std::vector<FitRecord> records;
    int stop_iter = 0;
    std::vector<std::string> diagnostics;

    const FitRecord& at(int iter) const;
    const FitRecord& stop_record() const { return at(stop_iter); }
    int last_iter() const { return records.empty() ? -1 : records.back().iter; }
    bool has_truth() const;
    bool has_coefficients() const;
};

/// `iter,loss,residual_norm,error_to_truth,weight_drift` plus `coef_1..coef_n`
/// when recorded and `drift_layer_1..drift_layer_d` for decoder traces.
std::string fit_trace_csv(const FitTrace& trace);

} // namespace specbias
