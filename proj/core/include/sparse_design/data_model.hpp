#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sparse_design {

/// Closed time interval [lo, hi] with lo < hi.
class Domain {
 public:
  Domain(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  bool contains(double t) const noexcept { return t >= lo_ && t <= hi_; }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  double lo_;
  double hi_;
};

/// Strictly increasing evaluation grid whose first and last points are the
/// domain endpoints.
class Grid {
 public:
  Grid(Domain domain, std::vector<double> points);

  const Domain& domain() const noexcept { return domain_; }
  std::span<const double> points() const noexcept { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Per-interval widths, size() - 1 entries.
  std::vector<double> spacing() const;
  std::span<const double> weights() const noexcept { return weights_; }

  /// Index of the grid node within `tol` of t, if any.
  std::optional<std::size_t> index_of(double t, double tol = -1.0) const;
  std::size_t nearest_index(double t) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.domain_ == b.domain_ && a.points_ == b.points_;
  }

 private:
  Domain domain_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

Grid make_grid(const Domain& domain, std::size_t size);

struct SubjectRecord {
  std::string id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t count() const noexcept { return times.size(); }
};

/// Irregular per-subject observations U_ij at times t_ij.
class SparseSample {
 public:
  SparseSample(Domain domain, std::vector<SubjectRecord> subjects);

  const Domain& domain() const noexcept { return domain_; }
  std::span<const SubjectRecord> subjects() const noexcept { return subjects_; }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t size() const noexcept { return subjects_.size(); }
  std::size_t observation_count() const noexcept;
  std::optional<std::size_t> find(std::string_view id) const;

  /// Drops observations outside `domain`; subjects left empty are dropped
  /// with a warning.
  SparseSample restricted_to(const Domain& domain) const;
  /// Subset in the given order.
  SparseSample subset(std::span<const std::size_t> indices) const;

 private:
  Domain domain_;
  std::vector<SubjectRecord> subjects_;
};

/// Scalar responses aligned with the subjects of a SparseSample.
class ResponseVector {
 public:
  ResponseVector(const SparseSample& sample, std::vector<std::pair<std::string, double>> entries);
  ResponseVector(std::vector<std::string> ids, std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::string> ids() const noexcept { return ids_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  double mean() const noexcept { return mean_; }
  double variance() const;

  ResponseVector subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  double mean_ = 0.0;
};

enum class Target { trajectory, response };

std::string_view to_string(Target target) noexcept;
Target parse_target(std::string_view text);

/// p distinct grid nodes, stored ascending.
class Design {
 public:
  static Design from_indices(const Grid& grid, std::vector<std::size_t> indices, Target target);
  /// Each time must coincide with a grid node (relative tolerance 1e-9).
  static Design from_times(const Grid& grid, std::span<const double> times, Target target);

  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return indices_.size(); }
  Target target() const noexcept { return target_; }

  friend bool operator==(const Design&, const Design&) = default;

 private:
  Design(std::vector<std::size_t> indices, std::vector<double> times, Target target)
      : indices_(std::move(indices)), times_(std::move(times)), target_(target) {}

  std::vector<std::size_t> indices_;
  std::vector<double> times_;
  Target target_;
};

// CSV ingestion: `subject_id,time,value` and `subject_id,response`.

SparseSample load_longitudinal(const std::filesystem::path& path,
                               std::optional<Domain> domain = std::nullopt);
SparseSample read_longitudinal(std::istream& in, std::optional<Domain> domain = std::nullopt);
void write_longitudinal(std::ostream& out, const SparseSample& sample);
void save_longitudinal(const std::filesystem::path& path, const SparseSample& sample);

ResponseVector load_responses(const std::filesystem::path& path, const SparseSample& sample);
ResponseVector read_responses(std::istream& in, const SparseSample& sample);
void write_responses(std::ostream& out, const ResponseVector& responses);

/// Shortest round-trip decimal text for a double.
std::string format_double(double value);

}  // namespace sparse_design
