#pragma once

#include <cstddef>
#include <functional>

namespace fairprice {

// Runs fn(chunk_idx, begin, end) over fixed-size chunks of [0, n).
// Chunk boundaries depend only on n and chunk_size, never on the worker
// count, so per-chunk partial results combined in chunk order give
// bit-identical totals for any number of workers.
void parallel_chunks(std::size_t n, std::size_t chunk_size, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

std::size_t chunk_count(std::size_t n, std::size_t chunk_size);

// FAIRPRICE_WORKERS env override, else hardware concurrency (min 1).
std::size_t default_workers();

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

}  // namespace fairprice
