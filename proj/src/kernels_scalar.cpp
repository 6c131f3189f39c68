#include "fairpost/kernels.hpp"

#include <cmath>

namespace fairpost::kernels::detail {
namespace {

// Every backend accumulates in the same canonical order: four interleaved
// partial sums over the 4-aligned prefix, reduced as (l0+l2)+(l1+l3), then a
// sequential tail; multiply-adds are fused exactly where the vector units
// fuse them. Results are bitwise identical across backends, so fitted
// thresholds and reports never depend on the host ISA.

inline double reduce(const double acc[4], double tail) {
    return ((acc[0] + acc[2]) + (acc[1] + acc[3])) + tail;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t vn = n - n % 4;
    for (std::size_t i = 0; i < vn; ++i)
        acc[i % 4] = std::fma(a[i], b[i], acc[i % 4]);
    double tail = 0.0;
    for (std::size_t i = vn; i < n; ++i) tail = std::fma(a[i], b[i], tail);
    return reduce(acc, tail);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double hinge_sum_scalar(const double* margin, const double* slope,
                        double lambda, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t vn = n - n % 4;
    for (std::size_t i = 0; i < vn; ++i) {
        const double v = std::fma(-lambda, slope[i], margin[i]);
        if (v > 0.0) acc[i % 4] += v;
    }
    double tail = 0.0;
    for (std::size_t i = vn; i < n; ++i) {
        const double v = std::fma(-lambda, slope[i], margin[i]);
        if (v > 0.0) tail += v;
    }
    return reduce(acc, tail);
}

double indicator_weighted_sum_scalar(const double* margin, const double* slope,
                                     const double* w, double lambda,
                                     std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t vn = n - n % 4;
    for (std::size_t i = 0; i < vn; ++i) {
        if (margin[i] > lambda * slope[i]) acc[i % 4] += w[i];
    }
    double tail = 0.0;
    for (std::size_t i = vn; i < n; ++i) {
        if (margin[i] > lambda * slope[i]) tail += w[i];
    }
    return reduce(acc, tail);
}

}  // namespace

const Backend& scalar_backend() {
    static const Backend backend{dot_scalar, axpy_scalar, hinge_sum_scalar,
                                 indicator_weighted_sum_scalar, "scalar"};
    return backend;
}

}  // namespace fairpost::kernels::detail
