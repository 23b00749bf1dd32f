#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace fbmlab {

namespace detail {

// Cached FFTW plans, keyed by (size, direction). Plans are created with
// FFTW_UNALIGNED so they can be executed on any array via the new-array API
// (execution is thread-safe; creation is serialized by the mutex).
class FftPlans {
  public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> tmp(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                       reinterpret_cast<fftw_complex*>(tmp.data()),
                                       reinterpret_cast<fftw_complex*>(tmp.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw plan creation failed");
        plans_[key] = p;
        return p;
    }

  private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mu_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

/// In-place DFT, unnormalized forward convention sum_j x_j e^{-2pi i jk/n}.
inline void fft_forward(std::vector<std::complex<double>>& a) {
    if (a.empty()) return;
    fftw_plan p = detail::FftPlans::instance().get(a.size(), FFTW_FORWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(a.data()));
}

/// In-place inverse DFT, normalized by 1/n (fft_inverse(fft_forward(x)) == x).
inline void fft_inverse(std::vector<std::complex<double>>& a) {
    if (a.empty()) return;
    fftw_plan p = detail::FftPlans::instance().get(a.size(), FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(a.data()));
    const double inv = 1.0 / static_cast<double>(a.size());
    for (auto& z : a) z *= inv;
}

}  // namespace fbmlab
