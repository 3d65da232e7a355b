#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace ppikit::kernels {

// Backend for the data-parallel inner loops. The scalar implementation is the
// reference; the AVX2 one uses the same 4-lane accumulation pattern (lane j
// sums elements j, j+4, j+8, ... and the lanes are reduced as
// (l0+l2) + (l1+l3)), so both backends return bit-identical results. That
// keeps every downstream number independent of which backend ran.
enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend b);
// Returns false (and leaves the backend unchanged) if `b` is unsupported on
// this CPU or was compiled out.
bool set_backend(Backend b);
// Honors PPIKIT_KERNELS=scalar|avx2|auto; called once lazily.
std::string_view backend_name(Backend b);

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
// sum over i of (x[i] - mean)^2
double sum_sq_dev(std::span<const double> x, double mean);
// sum over i of (x[i] - mx) * (y[i] - my)
double sum_prod_dev(std::span<const double> x, double mx,
                    std::span<const double> y, double my);
double sum_sqrt(std::span<const double> x);
// sum over i of x[idx[i]]
double sum_gather(std::span<const double> x, std::span<const std::uint32_t> idx);
// out = a - b, elementwise
void sub(std::span<const double> a, std::span<const double> b, std::span<double> out);
// out = a * b, elementwise
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
// d[j] += (a - b[j])^2; one row of a pairwise squared-distance accumulation
void sq_dist_accum(double a, std::span<const double> b, std::span<double> d);

// Two-pass moment helpers built on the kernels above. Sample variance and
// covariance use the n-1 denominator and return 0 for fewer than 2 points.
double mean(std::span<const double> x);
double sample_var(std::span<const double> x);
double sample_cov(std::span<const double> x, std::span<const double> y);

} // namespace ppikit::kernels
