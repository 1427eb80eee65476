#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "fairprice/kernels.hpp"

using namespace fairprice;

TEST_SUITE("kernels") {

TEST_CASE("scalar reference values") {
    const double a[] = {1.0, 2.0, -3.0};
    const double b[] = {3.0, 5.0, -3.5};
    CHECK(kernels::scalar_ops().sum_abs_diff(a, b, 3) == doctest::Approx(5.5));
    CHECK(kernels::scalar_ops().sum_sq_diff(a, b, 3) == doctest::Approx(4.0 + 9.0 + 0.25));
}

TEST_CASE("outer_accum scalar reference") {
    std::vector<double> dst(6, 1.0);
    const double a[] = {2.0, 3.0};
    const double b[] = {1.0, 0.0, -1.0};
    kernels::scalar_ops().outer_accum(dst.data(), a, 2, b, 3);
    CHECK(dst == std::vector<double>{3.0, 1.0, -1.0, 4.0, 1.0, -2.0});
}

TEST_CASE("avx2 variant matches scalar on random inputs") {
    if (!kernels::avx2_supported()) {
        MESSAGE("avx2 unavailable, equivalence trivially skipped");
        return;
    }
    std::mt19937_64 rng(42);
    std::normal_distribution<double> norm(0.0, 10.0);
    // lengths straddle the vector width and remainder paths
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 257u, 1000u}) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = norm(rng);
        for (auto& v : b) v = norm(rng);
        const double l1s = kernels::scalar_ops().sum_abs_diff(a.data(), b.data(), n);
        const double l1v = kernels::avx2_ops().sum_abs_diff(a.data(), b.data(), n);
        CHECK(l1v == doctest::Approx(l1s).epsilon(1e-12));
        const double l2s = kernels::scalar_ops().sum_sq_diff(a.data(), b.data(), n);
        const double l2v = kernels::avx2_ops().sum_sq_diff(a.data(), b.data(), n);
        CHECK(l2v == doctest::Approx(l2s).epsilon(1e-12));
    }
}

TEST_CASE("outer_accum avx2 matches scalar") {
    if (!kernels::avx2_supported()) return;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> norm(0.0, 1.0);
    for (std::size_t na : {1u, 2u, 64u}) {
        for (std::size_t nb : {1u, 3u, 5u, 64u, 100u}) {
            std::vector<double> a(na), b(nb), d1(na * nb, 0.5), d2(na * nb, 0.5);
            for (auto& v : a) v = norm(rng);
            for (auto& v : b) v = norm(rng);
            kernels::scalar_ops().outer_accum(d1.data(), a.data(), na, b.data(), nb);
            kernels::avx2_ops().outer_accum(d2.data(), a.data(), na, b.data(), nb);
            for (std::size_t i = 0; i < d1.size(); ++i)
                CHECK(d2[i] == doctest::Approx(d1[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("dispatch honors force") {
    kernels::force("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    if (kernels::avx2_supported()) {
        kernels::force("avx2");
        CHECK(std::string(kernels::active().name) == "avx2");
    }
    kernels::force("auto");
    CHECK_THROWS_AS(kernels::force("sse9"), std::invalid_argument);
}

}  // TEST_SUITE
