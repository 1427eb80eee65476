#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops shared by the knn engine and the KDE-based
// dependence estimator. Scalar reference implementations always exist;
// an AVX2/FMA variant is selected at runtime when the CPU supports it.
// The env var FAIRPRICE_KERNELS={scalar,avx2} forces a backend.

namespace fairprice::kernels {

struct Ops {
    // sum_d |a[d] - b[d]|
    double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
    // sum_d (a[d] - b[d])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    // dst[i*nb + j] += a[i] * b[j]  (rank-1 accumulate, row-major dst)
    void (*outer_accum)(double* dst, const double* a, std::size_t na,
                        const double* b, std::size_t nb);
    const char* name;
};

const Ops& scalar_ops();
const Ops& avx2_ops();         // valid only if avx2_supported()
bool avx2_supported();

// Backend chosen at first use; `force` overrides it (tests, benchmarking).
const Ops& active();
void force(const std::string& backend_name);

inline double sum_abs_diff(const double* a, const double* b, std::size_t n) {
    return active().sum_abs_diff(a, b, n);
}
inline double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    return active().sum_sq_diff(a, b, n);
}
inline void outer_accum(double* dst, const double* a, std::size_t na,
                        const double* b, std::size_t nb) {
    active().outer_accum(dst, a, na, b, nb);
}

}  // namespace fairprice::kernels
