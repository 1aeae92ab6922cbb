#include "ctxaudit/vecops.hpp"

#include <atomic>
#include <cassert>
#include <cmath>

#include "ctxaudit/error.hpp"

namespace ctxaudit::vecops {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void add_scalar(double* y, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_scalar(double* x, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

}  // namespace detail

namespace {

struct Kernels {
    double (*dot)(const double*, const double*, std::size_t);
    void (*add)(double*, const double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    const char* name;
};

constexpr Kernels kScalar{detail::dot_scalar, detail::add_scalar,
                          detail::scale_scalar, "scalar"};

Kernels detect() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2"))
        return Kernels{detail::dot_avx2, detail::add_avx2, detail::scale_avx2,
                       "avx2"};
#endif
    return kScalar;
}

std::atomic<bool> g_force_scalar{false};

const Kernels& active() {
    static const Kernels detected = detect();
    return g_force_scalar.load(std::memory_order_relaxed) ? kScalar : detected;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidArgumentError("vecops::dot: size mismatch");
    return active().dot(a.data(), b.data(), a.size());
}

double l2_norm(std::span<const double> a) {
    return std::sqrt(active().dot(a.data(), a.data(), a.size()));
}

void add_inplace(std::span<double> y, std::span<const double> x) {
    if (y.size() != x.size())
        throw InvalidArgumentError("vecops::add_inplace: size mismatch");
    active().add(y.data(), x.data(), y.size());
}

void scale_inplace(std::span<double> x, double s) {
    active().scale(x.data(), s, x.size());
}

std::string_view active_kernels() { return active().name; }

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

}  // namespace ctxaudit::vecops
