#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-vector kernels behind the embedding pipeline (clipping,
// ensemble means, projection statistics). Scalar reference implementations
// always exist; on x86 an AVX2 variant is selected once at startup. The two
// paths are equivalence-tested against each other.
namespace ctxaudit::vecops {

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
// y += x
void add_inplace(std::span<double> y, std::span<const double> x);
// x *= s
void scale_inplace(std::span<double> x, double s);

// Name of the active kernel set: "avx2" or "scalar".
std::string_view active_kernels();

// Pin the scalar reference path (e.g. for bit-exact cross-host replay).
// Affects subsequent calls process-wide; tests use it for equivalence checks.
void force_scalar(bool on);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void add_scalar(double* y, const double* x, std::size_t n);
void scale_scalar(double* x, double s, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
void add_avx2(double* y, const double* x, std::size_t n);
void scale_avx2(double* x, double s, std::size_t n);
#endif
}  // namespace detail

}  // namespace ctxaudit::vecops
