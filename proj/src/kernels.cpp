#include "onestep/kernels.hpp"

#include <atomic>
#include <cmath>

namespace onestep::kernels {

namespace scalar {

double sum(const double* x, std::size_t n) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* x, const double* y, std::size_t n) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double max(const double* x, std::size_t n) noexcept {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void exp_vec(const double* x, double* out, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

}  // namespace scalar

namespace {

std::atomic<bool> g_force_scalar{false};

bool cpu_has_avx2() noexcept {
#if defined(ONESTEP_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool use_avx2() noexcept {
    static const bool supported = cpu_has_avx2();
    return supported && !g_force_scalar.load(std::memory_order_relaxed);
}

}  // namespace

void force_scalar(bool on) noexcept {
    g_force_scalar.store(on, std::memory_order_relaxed);
}

const char* active_isa() noexcept { return use_avx2() ? "avx2" : "scalar"; }

#ifdef ONESTEP_HAVE_AVX2

double sum(const double* x, std::size_t n) noexcept {
    return use_avx2() ? avx2::sum(x, n) : scalar::sum(x, n);
}

double dot(const double* x, const double* y, std::size_t n) noexcept {
    return use_avx2() ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}

double max(const double* x, std::size_t n) noexcept {
    return use_avx2() ? avx2::max(x, n) : scalar::max(x, n);
}

void exp_vec(const double* x, double* out, std::size_t n) noexcept {
    if (use_avx2())
        avx2::exp_vec(x, out, n);
    else
        scalar::exp_vec(x, out, n);
}

#else

double sum(const double* x, std::size_t n) noexcept { return scalar::sum(x, n); }
double dot(const double* x, const double* y, std::size_t n) noexcept { return scalar::dot(x, y, n); }
double max(const double* x, std::size_t n) noexcept { return scalar::max(x, n); }
void exp_vec(const double* x, double* out, std::size_t n) noexcept { scalar::exp_vec(x, out, n); }

#endif

}  // namespace onestep::kernels
