#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "fairpost/kernels.hpp"
#include "fairpost/rng.hpp"

namespace {

std::vector<double> random_vector(fairpost::rng::Stream& s, std::size_t n,
                                  double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = s.next_uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("scalar reference dot and axpy on tiny sizes") {
    using namespace fairpost::kernels;
    const detail::Backend& ref = detail::scalar_backend();

    std::vector<double> a{1.0, -2.0, 3.0};
    std::vector<double> b{4.0, 5.0, -6.0};
    CHECK(ref.dot(a.data(), b.data(), 3) == doctest::Approx(-24.0));

    std::vector<double> y{1.0, 1.0, 1.0};
    ref.axpy(2.0, a.data(), y.data(), 3);
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[1] == doctest::Approx(-3.0));
    CHECK(y[2] == doctest::Approx(7.0));

    CHECK(ref.dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("hinge_sum matches direct formula") {
    using namespace fairpost::kernels;
    std::vector<double> m{0.5, -0.2, 0.9, 0.0};
    std::vector<double> s{1.0, -1.0, 0.5, 2.0};
    const double lam = 0.3;
    double expect = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        expect += std::max(m[i] - lam * s[i], 0.0);
    CHECK(hinge_sum(m.data(), s.data(), lam, m.size()) ==
          doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("indicator_weighted_sum uses a strict comparison") {
    using namespace fairpost::kernels;
    // margin == lambda * slope exactly: the sample must not count.
    std::vector<double> m{0.25};
    std::vector<double> s{0.5};
    std::vector<double> w{1.0};
    CHECK(indicator_weighted_sum(m.data(), s.data(), w.data(), 0.5, 1) ==
          0.0);
    CHECK(indicator_weighted_sum(m.data(), s.data(), w.data(),
                                 0.5 - 1e-12, 1) == 1.0);
}

TEST_CASE("simd backend agrees with scalar on every kernel") {
    using namespace fairpost::kernels;
    const detail::Backend& ref = detail::scalar_backend();
    const detail::Backend* simd = detail::avx2_backend();
    if (simd == nullptr) {
        MESSAGE("avx2 backend unavailable on this host; skipping");
        return;
    }

    fairpost::rng::Stream stream(fairpost::rng::derive(0xbeef, 1));
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{3},
                          std::size_t{4}, std::size_t{5}, std::size_t{8},
                          std::size_t{17}, std::size_t{64},
                          std::size_t{1001}}) {
        auto a = random_vector(stream, n, -3.0, 3.0);
        auto b = random_vector(stream, n, -3.0, 3.0);
        auto w = random_vector(stream, n, -1.0, 1.0);

        // Both backends accumulate in the same lane-striped order with the
        // same fused contractions, so every kernel must agree bitwise.
        CHECK(ref.dot(a.data(), b.data(), n) ==
              simd->dot(a.data(), b.data(), n));

        auto y1 = w;
        auto y2 = w;
        ref.axpy(0.7, a.data(), y1.data(), n);
        simd->axpy(0.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);

        for (double lam : {-0.4, 0.0, 0.31}) {
            CHECK(ref.hinge_sum(a.data(), b.data(), lam, n) ==
                  simd->hinge_sum(a.data(), b.data(), lam, n));
            CHECK(ref.indicator_weighted_sum(a.data(), b.data(), w.data(),
                                             lam, n) ==
                  simd->indicator_weighted_sum(a.data(), b.data(), w.data(),
                                               lam, n));
        }
    }
}

TEST_CASE("indicator ties resolve identically across backends") {
    using namespace fairpost::kernels;
    const detail::Backend& ref = detail::scalar_backend();
    const detail::Backend* simd = detail::avx2_backend();
    if (simd == nullptr) {
        MESSAGE("avx2 backend unavailable on this host; skipping");
        return;
    }
    // Construct exact ties margin = lambda*slope at several lanes.
    const double lam = 0.375;  // exactly representable
    std::vector<double> slope{1.0, 2.0, -4.0, 8.0, 0.5, 1.0, 2.0, -1.0, 3.0};
    std::vector<double> margin(slope.size());
    for (std::size_t i = 0; i < slope.size(); ++i)
        margin[i] = lam * slope[i];
    std::vector<double> w(slope.size(), 1.0);
    const double a = ref.indicator_weighted_sum(margin.data(), slope.data(),
                                                w.data(), lam, w.size());
    const double b = simd->indicator_weighted_sum(margin.data(), slope.data(),
                                                  w.data(), lam, w.size());
    CHECK(a == 0.0);
    CHECK(b == 0.0);
}

TEST_CASE("public entry points dispatch and report a backend name") {
    using namespace fairpost::kernels;
    std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> b{5.0, 4.0, 3.0, 2.0, 1.0};
    CHECK(dot(a.data(), b.data(), 5) == doctest::Approx(35.0));
    const char* name = active_backend();
    CHECK((std::string(name) == "scalar" || std::string(name) == "avx2"));
}
