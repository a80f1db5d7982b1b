// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "crs/kernels.hpp"

namespace crs::kernels::detail {

const Table& scalar_table();
#if defined(CRS_BUILD_AVX2)
const Table& avx2_table();
#endif
#if defined(CRS_BUILD_NEON)
const Table& neon_table();
#endif

}  // namespace crs::kernels::detail
