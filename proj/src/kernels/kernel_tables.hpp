#pragma once

#include "epipolicy/simd.hpp"

namespace epipolicy::simd::detail {

extern const KernelTable kScalarTable;
#if defined(EPIPOLICY_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(EPIPOLICY_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace epipolicy::simd::detail
