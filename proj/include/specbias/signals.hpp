#pragma once

#include "specbias/spectral.hpp"

#include <cstdint>
#include <string>

namespace specbias {

enum class SignalLaw { RandomInSpan, Explicit, Step, Trig, Custom };

std::string to_string(SignalLaw law);
SignalLaw signal_law_from_string(const std::string& name);

/// Ground-truth signal x. In-span laws draw from span{w_1..w_p}.
struct SignalModel {
    int n = 0;
    int p = 1;
    SignalLaw law = SignalLaw::RandomInSpan;
    Vector coefficients;    // Explicit: weights on w_1..w_p
    Vector values;          // Custom
    int trig_index = 1;     // Trig: x = w_i
    double step_level = 0.5; // Step: -level outside, +level on the middle half
    std::uint64_t seed = 0;

    void validate() const;
    bool in_span() const { return law == SignalLaw::RandomInSpan || law == SignalLaw::Explicit; }
};

/// RandomInSpan draws unit-norm x.
Vector gen_signal(const SignalModel& model);

/// z ~ N(0, varsigma^2 / n I), so E||z||^2 = varsigma^2.
struct NoiseModel {
    int n = 0;
    double varsigma = 1.0;
    std::uint64_t seed = 0;
};

Vector gen_noise(const NoiseModel& model);

/// -level on the outer quarters, +level on the middle half.
Vector step_function(int n, double level = 0.5);

/// ||x - Pi_p x|| / ||x|| for the projection onto span{w_1..w_p}.
double out_of_span_fraction(const Vector& x, int p);

/// 10 log10(peak^2 / mse) with peak = max |truth|.
double psnr(const Vector& truth, double mse);

} // namespace specbias
