#include "specbias/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace specbias::fft {
namespace {

// FFTW planning is not thread-safe, execution with new-array calls is. Plans
// are created once per (length, direction) under a lock and reused.
struct PlanCache {
    std::mutex mutex;
    std::map<std::pair<int, int>, fftw_plan> plans;

    fftw_plan get(int n, int sign)
    {
        std::lock_guard lock(mutex);
        auto key = std::make_pair(n, sign);
        auto it = plans.find(key);
        if (it != plans.end()) {
            return it->second;
        }
        auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
        auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
        fftw_plan plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans.emplace(key, plan);
        return plan;
    }

    ~PlanCache()
    {
        for (auto& [key, plan] : plans) {
            fftw_destroy_plan(plan);
        }
    }
};

PlanCache& cache()
{
    static PlanCache instance;
    return instance;
}

std::vector<Complex> run(std::span<const Complex> x, int sign)
{
    const int n = static_cast<int>(x.size());
    std::vector<Complex> in(x.begin(), x.end());
    std::vector<Complex> out(x.size());
    if (n == 0) {
        return out;
    }
    fftw_plan plan = cache().get(n, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

} // namespace

std::vector<Complex> forward(std::span<const Complex> x)
{
    return run(x, FFTW_FORWARD);
}

std::vector<Complex> backward(std::span<const Complex> x)
{
    return run(x, FFTW_BACKWARD);
}

std::vector<Complex> forward_real(std::span<const double> x)
{
    std::vector<Complex> c(x.begin(), x.end());
    return forward(c);
}

} // namespace specbias::fft
