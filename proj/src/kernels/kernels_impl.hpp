#pragma once

#include "ivselect/kernels.hpp"

namespace ivselect::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(IVSELECT_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

#if defined(IVSELECT_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace ivselect::kernels::detail
