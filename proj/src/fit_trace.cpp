#include "specbias/fit_trace.hpp"

#include "specbias/errors.hpp"

#include <cmath>
#include <sstream>

namespace specbias {

const FitRecord& FitTrace::at(int iter) const
{
    require(!records.empty() && iter >= 0 && iter <= records.back().iter,
            "FitTrace: iteration " + std::to_string(iter) + " was not recorded");
    return records[static_cast<std::size_t>(iter - records.front().iter)];
}

bool FitTrace::has_truth() const
{
    return !records.empty() && !std::isnan(records.front().error_to_truth);
}

bool FitTrace::has_coefficients() const
{
    return !records.empty() && records.front().coefficients.size() > 0;
}

std::string fit_trace_csv(const FitTrace& trace)
{
    std::ostringstream os;
    os.precision(17);
    os << "iter,loss,residual_norm,error_to_truth,weight_drift";
    const Eigen::Index ncoef = trace.has_coefficients() ? trace.records.front().coefficients.size() : 0;
    const std::size_t nlayers = trace.records.empty() ? 0 : trace.records.front().layer_drift.size();
    for (Eigen::Index i = 1; i <= ncoef; ++i) {
        os << ",coef_" << i;
    }
    for (std::size_t l = 1; l <= nlayers; ++l) {
        os << ",drift_layer_" << l;
    }
    os << '\n';
    for (const auto& r : trace.records) {
        os << r.iter << ',' << r.loss << ',' << r.residual_norm << ',';
        if (!std::isnan(r.error_to_truth)) {
            os << r.error_to_truth;
        }
        os << ',' << r.weight_drift;
        for (Eigen::Index i = 0; i < ncoef; ++i) {
            os << ',' << r.coefficients[i];
        }
        for (double d : r.layer_drift) {
            os << ',' << d;
        }
        os << '\n';
    }
    return os.str();
}

} // namespace specbias
