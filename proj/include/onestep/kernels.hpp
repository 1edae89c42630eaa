#pragma once

#include <cstddef>

// Data-parallel inner loops shared across the toolkit: weighted dot products
// for the correction step, vectorised exp for mixture densities, and the
// reductions under both. Each kernel has a scalar reference implementation
// and, on x86-64, an AVX2+FMA variant selected once at startup via cpuid.
// The variants are equivalence-tested against each other; results may differ
// by a few ulp (different summation order, polynomial exp).
namespace onestep::kernels {

/// Sum of x[0..n).
double sum(const double* x, std::size_t n) noexcept;

/// Inner product of x and y over [0, n).
double dot(const double* x, const double* y, std::size_t n) noexcept;

/// Maximum of x[0..n). Requires n >= 1; -inf entries are fine, NaN is not.
double max(const double* x, std::size_t n) noexcept;

/// out[i] = exp(x[i]). Results that would be subnormal may flush to zero
/// (inputs below about -708.4); +-inf and NaN behave like std::exp.
void exp_vec(const double* x, double* out, std::size_t n) noexcept;

/// Name of the implementation currently dispatched: "avx2" or "scalar".
const char* active_isa() noexcept;

/// Test hook: force the scalar path regardless of cpu support.
void force_scalar(bool on) noexcept;

namespace scalar {
double sum(const double* x, std::size_t n) noexcept;
double dot(const double* x, const double* y, std::size_t n) noexcept;
double max(const double* x, std::size_t n) noexcept;
void exp_vec(const double* x, double* out, std::size_t n) noexcept;
}  // namespace scalar

#ifdef ONESTEP_HAVE_AVX2
namespace avx2 {
double sum(const double* x, std::size_t n) noexcept;
double dot(const double* x, const double* y, std::size_t n) noexcept;
double max(const double* x, std::size_t n) noexcept;
void exp_vec(const double* x, double* out, std::size_t n) noexcept;
}  // namespace avx2
#endif

}  // namespace onestep::kernels
