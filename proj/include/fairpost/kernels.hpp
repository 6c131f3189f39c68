#pragma once

// Data-parallel inner loops used by the estimators and calibration scans.
// Every kernel has a scalar reference implementation and may have SIMD
// variants; the active variant is chosen once at startup from CPU features.
// Set FAIRPOST_SIMD=scalar|avx2 to force a backend (unsupported requests
// fall back to scalar). Backends may reassociate sums, so results agree
// with the reference up to floating-point reduction order only; comparison
// predicates are evaluated exactly in every backend.

#include <cstddef>

namespace fairpost::kernels {

// Inner product sum_i a[i]*b[i].
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i].
void axpy(double alpha, const double* x, double* y, std::size_t n);

// sum_i max(margin[i] - lambda*slope[i], 0): the positive-part objective
// of a thresholded linear family at threshold lambda.
double hinge_sum(const double* margin, const double* slope, double lambda,
                 std::size_t n);

// sum_i w[i] * [margin[i] > lambda*slope[i]] with a strict comparison:
// the signed cell-mean constraint of a thresholded classifier family.
double indicator_weighted_sum(const double* margin, const double* slope,
                              const double* w, double lambda, std::size_t n);

// Name of the backend selected at startup ("scalar" or "avx2").
const char* active_backend();

namespace detail {
struct Backend {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*hinge_sum)(const double*, const double*, double, std::size_t);
    double (*indicator_weighted_sum)(const double*, const double*,
                                     const double*, double, std::size_t);
    const char* name;
};
const Backend& scalar_backend();
const Backend* avx2_backend();  // nullptr when unavailable on this CPU/build
}  // namespace detail

}  // namespace fairpost::kernels
