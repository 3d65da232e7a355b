// AVX2 backend. Compiled with -mavx2 in its own translation unit and only
// reached after a runtime cpuid check. Lane layout and reduction order match
// the scalar reference exactly (no FMA), so results are bit-identical.

#if defined(PPIKIT_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace ppikit::kernels::detail {

namespace {

// (l0+l2) + (l1+l3), same order as the scalar reference
inline double hsum(__m256d acc) {
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

} // namespace

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) r += x[i];
    return r;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, p);
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sum_sq_dev_avx2(const double* x, double m, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    __m256d vm = _mm256_set1_pd(m);
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d t = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(t, t));
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) {
        double t = x[i] - m;
        r += t * t;
    }
    return r;
}

double sum_prod_dev_avx2(const double* x, double mx, const double* y, double my,
                         std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    __m256d vmx = _mm256_set1_pd(mx);
    __m256d vmy = _mm256_set1_pd(my);
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d tx = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmx);
        __m256d ty = _mm256_sub_pd(_mm256_loadu_pd(y + i), vmy);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(tx, ty));
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) r += (x[i] - mx) * (y[i] - my);
    return r;
}

double sum_sqrt_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_sqrt_pd(_mm256_loadu_pd(x + i)));
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) r += std::sqrt(x[i]);
    return r;
}

double sum_gather_avx2(const double* x, const std::uint32_t* idx, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
        acc = _mm256_add_pd(acc, _mm256_i32gather_pd(x, vi, 8));
    }
    double r = hsum(acc);
    for (std::size_t i = body; i < n; ++i) r += x[idx[i]];
    return r;
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = a[i] * b[i];
}

void sq_dist_accum_avx2(double a, const double* b, double* d, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        __m256d t = _mm256_sub_pd(va, _mm256_loadu_pd(b + i));
        __m256d acc = _mm256_add_pd(_mm256_loadu_pd(d + i), _mm256_mul_pd(t, t));
        _mm256_storeu_pd(d + i, acc);
    }
    for (std::size_t i = body; i < n; ++i) {
        double t = a - b[i];
        d[i] += t * t;
    }
}

} // namespace ppikit::kernels::detail

#endif // PPIKIT_HAVE_AVX2
