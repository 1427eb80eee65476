#include "fairprice/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fairprice::kernels {
namespace {

const Ops* g_forced = nullptr;

const Ops& select() {
    if (const char* env = std::getenv("FAIRPRICE_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return scalar_ops();
        if (want == "avx2" && avx2_supported()) return avx2_ops();
    }
    return avx2_supported() ? avx2_ops() : scalar_ops();
}

}  // namespace

const Ops& active() {
    if (g_forced) return *g_forced;
    static const Ops& chosen = select();
    return chosen;
}

void force(const std::string& backend_name) {
    if (backend_name == "scalar") {
        g_forced = &scalar_ops();
    } else if (backend_name == "avx2") {
        if (!avx2_supported()) throw std::runtime_error("avx2 not supported on this CPU");
        g_forced = &avx2_ops();
    } else if (backend_name == "auto" || backend_name.empty()) {
        g_forced = nullptr;
    } else {
        throw std::invalid_argument("unknown kernel backend: " + backend_name);
    }
}

}  // namespace fairprice::kernels
