// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers must check cpu support first (kernels.cpp does).

#include "onestep/kernels.hpp"

#ifdef ONESTEP_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

namespace onestep::kernels::avx2 {

namespace {

inline double hsum(__m256d v) noexcept {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// exp via the classic Cephes scheme: reduce x = n*ln2 + r with |r| <= ln2/2,
// evaluate e^r = 1 + 2r P(r^2) / (Q(r^2) - r P(r^2)), then scale by 2^n.
// The 2^n scaling is split in two so n = 1024 (inputs near the overflow
// threshold) and n = -1022 stay inside the normal exponent range.
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kC1 = 6.93145751953125e-1;             // ln2, high part
constexpr double kC2 = 1.42860682030941723212e-6;       // ln2, low part
constexpr double kMaxLog = 709.782712893383996843;      // exp overflows above
constexpr double kMinLog = -708.396418532264106224;     // exp subnormal below
constexpr double kP0 = 1.26177193074810590878e-4;
constexpr double kP1 = 3.02994407707441961300e-2;
constexpr double kP2 = 9.99999999999999999910e-1;
constexpr double kQ0 = 3.00198505138664455042e-6;
constexpr double kQ1 = 2.52448340349684104192e-3;
constexpr double kQ2 = 2.27265548208155028766e-1;
constexpr double kQ3 = 2.00000000000000000005e0;

inline __m256d pow2i(__m256d n) noexcept {
    // 2^n for integer-valued n in [-1023, 1023], via the exponent field.
    __m256i n64 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
    __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_castsi256_pd(bits);
}

inline __m256d exp4(__m256d x) noexcept {
    const __m256d xc =
        _mm256_max_pd(_mm256_min_pd(x, _mm256_set1_pd(kMaxLog)), _mm256_set1_pd(kMinLog));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(kLog2E)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC1), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC2), r);
    const __m256d rr = _mm256_mul_pd(r, r);

    __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kP0), rr, _mm256_set1_pd(kP1));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kP2));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), rr, _mm256_set1_pd(kQ1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ2));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ3));
    const __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    __m256d res = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    const __m256d n1 = _mm256_round_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)),
                                       _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
    res = _mm256_mul_pd(res, pow2i(n1));
    res = _mm256_mul_pd(res, pow2i(_mm256_sub_pd(n, n1)));

    // Specials: overflow -> inf, underflow -> 0, NaN passes through.
    res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                           _mm256_cmp_pd(x, _mm256_set1_pd(kMaxLog), _CMP_GT_OQ));
    res = _mm256_blendv_pd(res, _mm256_setzero_pd(),
                           _mm256_cmp_pd(x, _mm256_set1_pd(kMinLog), _CMP_LT_OQ));
    res = _mm256_blendv_pd(res, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
    return res;
}

}  // namespace

double sum(const double* x, std::size_t n) noexcept {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* x, const double* y, std::size_t n) noexcept {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double max(const double* x, std::size_t n) noexcept {
    std::size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
        m = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
    }
    for (; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void exp_vec(const double* x, double* out, std::size_t n) noexcept {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = i; k < n; ++k) buf[k - i] = x[k];
        alignas(32) double res[4];
        _mm256_store_pd(res, exp4(_mm256_load_pd(buf)));
        for (std::size_t k = i; k < n; ++k) out[k] = res[k - i];
    }
}

}  // namespace onestep::kernels::avx2

#endif  // ONESTEP_HAVE_AVX2
