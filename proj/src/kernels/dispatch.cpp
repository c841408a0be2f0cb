#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace ivselect::kernels {

const KernelTable& scalar() { return detail::kScalarTable; }

const KernelTable* simd() {
#if defined(IVSELECT_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (ok) return &detail::kAvx2Table;
#endif
#if defined(IVSELECT_HAVE_NEON)
    return &detail::kNeonTable;
#endif
    return nullptr;
}

const KernelTable& active() {
    static const KernelTable& table = [] () -> const KernelTable& {
        if (const char* env = std::getenv("IVSELECT_KERNELS")) {
            if (std::string_view(env) == "scalar") return scalar();
        }
        const KernelTable* best = simd();
        return best ? *best : scalar();
    }();
    return table;
}

}  // namespace ivselect::kernels
