#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sparse_design/consistency.hpp"
#include "sparse_design/cov_model.hpp"
#include "sparse_design/search.hpp"
#include "sparse_design/simulation.hpp"
#include "sparse_design/validation.hpp"

namespace sparse_design {

inline constexpr std::string_view kModelFormat = "sparse-design-model/1";

/// JSON text with shortest round-trip floats; loading reproduces the model
/// bit for bit.
std::string model_to_json(const ModelFit& model);
ModelFit model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelFit& model);
ModelFit load_model(const std::filesystem::path& path);

std::string design_to_json(const SearchResult& result, std::optional<std::uint64_t> seed = std::nullopt);
std::string earliest_to_json(const EarliestDesign& result, std::size_t p, Target target, double alpha,
                             const CriterionResult& criterion);
/// Reads `design_points` and `target` and snaps them onto the grid.
Design design_from_json(std::string_view text, const Grid& grid);
Design load_design(const std::filesystem::path& path, const Grid& grid);

std::string ridge_to_json(const RidgeSelection& selection);
std::string benchmark_summary_to_json(const BenchmarkReport& report);
std::string convergence_to_json(const ConvergenceReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sparse_design
