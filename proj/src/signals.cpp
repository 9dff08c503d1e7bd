#include "specbias/signals.hpp"

#include "specbias/errors.hpp"
#include "specbias/linalg.hpp"

#include <cmath>

namespace specbias {

std::string to_string(SignalLaw law)
{
    switch (law) {
    case SignalLaw::RandomInSpan:
        return "random-in-span";
    case SignalLaw::Explicit:
        return "explicit";
    case SignalLaw::Step:
        return "step";
    case SignalLaw::Trig:
        return "trig";
    case SignalLaw::Custom:
        return "custom";
    }
    return "custom";
}

SignalLaw signal_law_from_string(const std::string& name)
{
    for (auto law : {SignalLaw::RandomInSpan, SignalLaw::Explicit, SignalLaw::Step, SignalLaw::Trig,
                     SignalLaw::Custom}) {
        if (to_string(law) == name) {
            return law;
        }
    }
    throw InvalidArgument("unknown signal law '" + name + "'");
}

void SignalModel::validate() const
{
    require(n > 0 && n % 2 == 0, "signal: n must be a positive even integer");
    switch (law) {
    case SignalLaw::RandomInSpan:
        require(p >= 1 && p < n, "signal: need 1 <= p < n");
        break;
    case SignalLaw::Explicit:
        require(p >= 1 && p < n, "signal: need 1 <= p < n");
        require(coefficients.size() == p, "signal: explicit law needs exactly p coefficients");
        require(coefficients.allFinite(), "signal: coefficients must be finite");
        break;
    case SignalLaw::Step:
        require(std::isfinite(step_level), "signal: step level must be finite");
        break;
    case SignalLaw::Trig:
        require(trig_index >= 1 && trig_index <= n, "signal: trig index must lie in 1..n");
        break;
    case SignalLaw::Custom:
        require(values.size() == n && values.allFinite(), "signal: custom values must be n finite numbers");
        break;
    }
}

Vector gen_signal(const SignalModel& model)
{
    model.validate();
    const TrigBasis basis(model.n);
    switch (model.law) {
    case SignalLaw::RandomInSpan: {
        NormalSource normals(model.seed);
        Vector c = Vector::Zero(model.n);
        c.head(model.p) = normals.vector(model.p);
        const double norm = c.norm();
        if (norm == 0.0) {
            throw NumericalError("gen_signal: drew an all-zero coefficient vector");
        }
        return basis.synthesize(c / norm);
    }
    case SignalLaw::Explicit: {
        Vector c = Vector::Zero(model.n);
        c.head(model.p) = model.coefficients;
        return basis.synthesize(c);
    }
    case SignalLaw::Step:
        return step_function(model.n, model.step_level);
    case SignalLaw::Trig:
        return basis.vector(model.trig_index);
    case SignalLaw::Custom:
        return model.values;
    }
    return Vector();
}

Vector gen_noise(const NoiseModel& model)
{
    require(model.n > 0, "noise: n must be positive");
    require(std::isfinite(model.varsigma) && model.varsigma >= 0.0, "noise: varsigma must be finite and >= 0");
    NormalSource normals(model.seed);
    return normals.vector(model.n, model.varsigma / std::sqrt(static_cast<double>(model.n)));
}

Vector step_function(int n, double level)
{
    require(n >= 4, "step_function: n must be at least 4");
    Vector x = Vector::Constant(n, -level);
    x.segment(n / 4, n / 2).setConstant(level);
    return x;
}

double out_of_span_fraction(const Vector& x, int p)
{
    const int n = static_cast<int>(x.size());
    require(p >= 0 && p <= n, "out_of_span_fraction: p out of range");
    const double norm = x.norm();
    if (norm == 0.0) {
        return 0.0;
    }
    return TrigBasis(n).analyze(x).tail(n - p).norm() / norm;
}

double psnr(const Vector& truth, double mse)
{
    require(mse > 0.0, "psnr: mse must be positive");
    const double peak = truth.cwiseAbs().maxCoeff();
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace specbias
