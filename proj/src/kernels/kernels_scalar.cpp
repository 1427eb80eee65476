#include "fairprice/kernels.hpp"

#include <cmath>

namespace fairprice::kernels {
namespace {

double scalar_sum_abs_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

double scalar_sum_sq_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void scalar_outer_accum(double* dst, const double* a, std::size_t na,
                        const double* b, std::size_t nb) {
    for (std::size_t i = 0; i < na; ++i) {
        const double ai = a[i];
        double* row = dst + i * nb;
        for (std::size_t j = 0; j < nb; ++j) row[j] += ai * b[j];
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{scalar_sum_abs_diff, scalar_sum_sq_diff,
                         scalar_outer_accum, "scalar"};
    return ops;
}

}  // namespace fairprice::kernels
