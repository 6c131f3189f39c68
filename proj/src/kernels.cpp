#include "fairpost/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace fairpost::kernels {
namespace {

const detail::Backend& select_backend() {
    const char* forced = std::getenv("FAIRPOST_SIMD");
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0)
        return detail::scalar_backend();
    const detail::Backend* avx2 = detail::avx2_backend();
    if (forced != nullptr && std::strcmp(forced, "avx2") == 0)
        return avx2 != nullptr ? *avx2 : detail::scalar_backend();
    return avx2 != nullptr ? *avx2 : detail::scalar_backend();
}

const detail::Backend& active() {
    static const detail::Backend& backend = select_backend();
    return backend;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}

double hinge_sum(const double* margin, const double* slope, double lambda,
                 std::size_t n) {
    return active().hinge_sum(margin, slope, lambda, n);
}

double indicator_weighted_sum(const double* margin, const double* slope,
                              const double* w, double lambda, std::size_t n) {
    return active().indicator_weighted_sum(margin, slope, w, lambda, n);
}

const char* active_backend() { return active().name; }

}  // namespace fairpost::kernels
