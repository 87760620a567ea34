#pragma once

#include "hmlr/kernels.hpp"

namespace hmlr::kernels::detail {

const KernelTable& scalar_table();
// nullptr when the backend was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace hmlr::kernels::detail
