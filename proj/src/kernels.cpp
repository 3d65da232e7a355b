#include "ppikit/kernels.hpp"

#include <cassert>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace ppikit::kernels {

namespace detail {

// Scalar reference kernels. These deliberately mirror the AVX2 lane layout:
// four independent accumulators, vector body over the first 4*(n/4) elements,
// fixed (l0+l2)+(l1+l3) reduction, then a sequential tail.

double sum_scalar(const double* x, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        l0 += x[i];
        l1 += x[i + 1];
        l2 += x[i + 2];
        l3 += x[i + 3];
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) r += x[i];
    return r;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        l0 += x[i] * y[i];
        l1 += x[i + 1] * y[i + 1];
        l2 += x[i + 2] * y[i + 2];
        l3 += x[i + 3] * y[i + 3];
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sum_sq_dev_scalar(const double* x, double m, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        double t0 = x[i] - m, t1 = x[i + 1] - m, t2 = x[i + 2] - m, t3 = x[i + 3] - m;
        l0 += t0 * t0;
        l1 += t1 * t1;
        l2 += t2 * t2;
        l3 += t3 * t3;
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) {
        double t = x[i] - m;
        r += t * t;
    }
    return r;
}

double sum_prod_dev_scalar(const double* x, double mx, const double* y, double my,
                           std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        l0 += (x[i] - mx) * (y[i] - my);
        l1 += (x[i + 1] - mx) * (y[i + 1] - my);
        l2 += (x[i + 2] - mx) * (y[i + 2] - my);
        l3 += (x[i + 3] - mx) * (y[i + 3] - my);
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) r += (x[i] - mx) * (y[i] - my);
    return r;
}

double sum_sqrt_scalar(const double* x, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        l0 += std::sqrt(x[i]);
        l1 += std::sqrt(x[i + 1]);
        l2 += std::sqrt(x[i + 2]);
        l3 += std::sqrt(x[i + 3]);
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) r += std::sqrt(x[i]);
    return r;
}

double sum_gather_scalar(const double* x, const std::uint32_t* idx, std::size_t n) {
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
    std::size_t body = n & ~std::size_t{3};
    for (std::size_t i = 0; i < body; i += 4) {
        l0 += x[idx[i]];
        l1 += x[idx[i + 1]];
        l2 += x[idx[i + 2]];
        l3 += x[idx[i + 3]];
    }
    double r = (l0 + l2) + (l1 + l3);
    for (std::size_t i = body; i < n; ++i) r += x[idx[i]];
    return r;
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void sq_dist_accum_scalar(double a, const double* b, double* d, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double t = a - b[i];
        d[i] += t * t;
    }
}

#if defined(PPIKIT_HAVE_AVX2)
double sum_avx2(const double* x, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
double sum_sq_dev_avx2(const double* x, double m, std::size_t n);
double sum_prod_dev_avx2(const double* x, double mx, const double* y, double my,
                         std::size_t n);
double sum_sqrt_avx2(const double* x, std::size_t n);
double sum_gather_avx2(const double* x, const std::uint32_t* idx, std::size_t n);
void sub_avx2(const double* a, const double* b, double* out, std::size_t n);
void mul_avx2(const double* a, const double* b, double* out, std::size_t n);
void sq_dist_accum_avx2(double a, const double* b, double* d, std::size_t n);
#endif

struct Vtable {
    double (*sum)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_sq_dev)(const double*, double, std::size_t);
    double (*sum_prod_dev)(const double*, double, const double*, double, std::size_t);
    double (*sum_sqrt)(const double*, std::size_t);
    double (*sum_gather)(const double*, const std::uint32_t*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*mul)(const double*, const double*, double*, std::size_t);
    void (*sq_dist_accum)(double, const double*, double*, std::size_t);
};

constexpr Vtable kScalarVtable = {
    sum_scalar,     dot_scalar, sum_sq_dev_scalar, sum_prod_dev_scalar,
    sum_sqrt_scalar, sum_gather_scalar, sub_scalar, mul_scalar,
    sq_dist_accum_scalar,
};

#if defined(PPIKIT_HAVE_AVX2)
constexpr Vtable kAvx2Vtable = {
    sum_avx2,     dot_avx2, sum_sq_dev_avx2, sum_prod_dev_avx2,
    sum_sqrt_avx2, sum_gather_avx2, sub_avx2, mul_avx2,
    sq_dist_accum_avx2,
};
#endif

bool cpu_has_avx2() {
#if defined(PPIKIT_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

struct State {
    Backend backend;
    const Vtable* vtable;
};

State detect_initial() {
    Backend want = Backend::Avx2;
    if (const char* env = std::getenv("PPIKIT_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) want = Backend::Scalar;
        else if (std::strcmp(env, "avx2") == 0) want = Backend::Avx2;
        // "auto" and anything else fall through to detection
    }
    if (want == Backend::Avx2 && cpu_has_avx2()) {
#if defined(PPIKIT_HAVE_AVX2)
        return {Backend::Avx2, &kAvx2Vtable};
#endif
    }
    return {Backend::Scalar, &kScalarVtable};
}

State& state() {
    static State s = detect_initial();
    return s;
}

} // namespace detail

Backend active_backend() { return detail::state().backend; }

bool backend_supported(Backend b) {
    if (b == Backend::Scalar) return true;
    return detail::cpu_has_avx2();
}

bool set_backend(Backend b) {
    if (!backend_supported(b)) return false;
    if (b == Backend::Scalar) {
        detail::state() = {Backend::Scalar, &detail::kScalarVtable};
        return true;
    }
#if defined(PPIKIT_HAVE_AVX2)
    detail::state() = {Backend::Avx2, &detail::kAvx2Vtable};
    return true;
#else
    return false;
#endif
}

std::string_view backend_name(Backend b) {
    return b == Backend::Scalar ? "scalar" : "avx2";
}

double sum(std::span<const double> x) {
    return detail::state().vtable->sum(x.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    return detail::state().vtable->dot(x.data(), y.data(), x.size());
}

double sum_sq_dev(std::span<const double> x, double mean) {
    return detail::state().vtable->sum_sq_dev(x.data(), mean, x.size());
}

double sum_prod_dev(std::span<const double> x, double mx,
                    std::span<const double> y, double my) {
    assert(x.size() == y.size());
    return detail::state().vtable->sum_prod_dev(x.data(), mx, y.data(), my, x.size());
}

double sum_sqrt(std::span<const double> x) {
    return detail::state().vtable->sum_sqrt(x.data(), x.size());
}

double sum_gather(std::span<const double> x, std::span<const std::uint32_t> idx) {
    return detail::state().vtable->sum_gather(x.data(), idx.data(), idx.size());
}

void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    assert(a.size() == b.size() && a.size() == out.size());
    detail::state().vtable->sub(a.data(), b.data(), out.data(), a.size());
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    assert(a.size() == b.size() && a.size() == out.size());
    detail::state().vtable->mul(a.data(), b.data(), out.data(), a.size());
}

void sq_dist_accum(double a, std::span<const double> b, std::span<double> d) {
    assert(b.size() == d.size());
    detail::state().vtable->sq_dist_accum(a, b.data(), d.data(), b.size());
}

double mean(std::span<const double> x) {
    assert(!x.empty());
    return sum(x) / static_cast<double>(x.size());
}

double sample_var(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    double m = mean(x);
    return sum_sq_dev(x, m) / static_cast<double>(x.size() - 1);
}

double sample_cov(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    if (x.size() < 2) return 0.0;
    double mx = mean(x);
    double my = mean(y);
    return sum_prod_dev(x, mx, y, my) / static_cast<double>(x.size() - 1);
}

} // namespace ppikit::kernels
