#include "seqsel/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <unordered_map>

namespace seqsel {

namespace {

std::mutex plan_mutex;

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        std::lock_guard lock(plan_mutex);
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.forward);
            fftw_destroy_plan(p.inverse);
        }
    }

    const PlanPair& get(std::size_t n) {
        auto it = plans_.find(n);
        if (it != plans_.end()) {
            return it->second;
        }
        std::lock_guard lock(plan_mutex);
        std::vector<Complex> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const int len = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        PlanPair p{fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, flags),
                   fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, flags)};
        return plans_.emplace(n, p).first->second;
    }

private:
    std::unordered_map<std::size_t, PlanPair> plans_;
};

PlanCache& cache() {
    thread_local PlanCache c;
    return c;
}

}  // namespace

void fft_forward(std::span<Complex> data) {
    if (data.empty()) {
        return;
    }
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(data.size()).forward, buf, buf);
}

void fft_inverse(std::span<Complex> data) {
    if (data.empty()) {
        return;
    }
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(data.size()).inverse, buf, buf);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) {
        v *= scale;
    }
}

std::vector<double> angular_frequencies(std::size_t n, double dt) {
    std::vector<double> w(n);
    const double df = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
    for (std::size_t i = 0; i < n; ++i) {
        const auto signed_i = i < (n + 1) / 2 ? static_cast<double>(i)
                                              : static_cast<double>(i) - static_cast<double>(n);
        w[i] = signed_i * df;
    }
    return w;
}

}  // namespace seqsel
