#pragma once

#include "sparse_design/consistency.hpp"
#include "sparse_design/cov_model.hpp"
#include "sparse_design/criteria.hpp"
#include "sparse_design/data_model.hpp"
#include "sparse_design/errors.hpp"
#include "sparse_design/io.hpp"
#include "sparse_design/numeric.hpp"
#include "sparse_design/parallel.hpp"
#include "sparse_design/predictor.hpp"
#include "sparse_design/search.hpp"
#include "sparse_design/simulation.hpp"
#include "sparse_design/smoothing.hpp"
#include "sparse_design/validation.hpp"

namespace sparse_design {

/// Library version, MAJOR.MINOR.PATCH.
const char* version() noexcept;

}  // namespace sparse_design
