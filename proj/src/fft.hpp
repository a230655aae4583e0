#pragma once

// Thin RAII layer over FFTW. Plan creation is serialized because the FFTW
// planner is not thread-safe; execution on distinct buffers is.

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace noisecal::detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class FftwPlan {
public:
    explicit FftwPlan(fftw_plan plan) : plan_(plan) {}
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    ~FftwPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

/// Unnormalized forward real-to-complex transform, X_k = sum_j x_j e^{-2 pi i jk/n}, k = 0..n/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out(x.size() / 2 + 1);
    fftw_plan p;
    {
        std::lock_guard lock(fftw_planner_mutex());
        p = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    FftwPlan plan(p);
    plan.execute();
    return out;
}

/// Unnormalized inverse, x_j = sum_k X_k e^{+2 pi i jk/n} over the Hermitian extension.
inline std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n) {
    std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
    std::vector<double> out(n);
    fftw_plan p;
    {
        std::lock_guard lock(fftw_planner_mutex());
        p = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                 FFTW_ESTIMATE);
    }
    FftwPlan plan(p);
    plan.execute();
    return out;
}

/// DCT-I: y_j = x_0 + (-1)^j x_{m-1} + 2 sum_{k=1}^{m-2} x_k cos(pi jk/(m-1)).
inline std::vector<double> dct1(std::span<const double> x) {
    std::vector<double> in(x.begin(), x.end());
    std::vector<double> out(x.size());
    fftw_plan p;
    {
        std::lock_guard lock(fftw_planner_mutex());
        p = fftw_plan_r2r_1d(static_cast<int>(x.size()), in.data(), out.data(), FFTW_REDFT00, FFTW_ESTIMATE);
    }
    FftwPlan plan(p);
    plan.execute();
    return out;
}

}  // namespace noisecal::detail
