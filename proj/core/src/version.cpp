#include "sparse_design/sparse_design.hpp"

namespace sparse_design {

const char* version() noexcept { return SPARSE_DESIGN_VERSION; }

}  // namespace sparse_design
