#include "fairprice/parallel.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fairprice {

std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    if (chunk_size == 0) chunk_size = 1;
    return (n + chunk_size - 1) / chunk_size;
}

std::size_t default_workers() {
    if (const char* env = std::getenv("FAIRPRICE_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    if (workers == 0) workers = default_workers();
    const std::size_t chunks = chunk_count(n, chunk_size);
    if (workers <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    const std::size_t spawn = std::min(workers, chunks) - 1;
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace fairprice
