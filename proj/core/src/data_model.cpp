#include "sparse_design/data_model.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"

namespace sparse_design {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::parse: return "parse";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::format: return "format";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Domain / Grid

Domain::Domain(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(ErrorKind::invalid_argument,
                "domain requires finite lo < hi, got [" + format_double(lo) + ", " +
                    format_double(hi) + "]");
  }
}

Grid::Grid(Domain domain, std::vector<double> points)
    : domain_(domain), points_(std::move(points)) {
  if (points_.size() < 2) throw Error(ErrorKind::invalid_argument, "grid needs at least 2 points");
  if (points_.front() != domain_.lo() || points_.back() != domain_.hi()) {
    throw Error(ErrorKind::invalid_argument, "grid must start at domain.lo and end at domain.hi");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) {
      throw Error(ErrorKind::invalid_argument, "grid points must be strictly increasing");
    }
  }
  weights_ = trapezoid_weights(points_);
}

std::vector<double> Grid::spacing() const {
  std::vector<double> out(points_.size() - 1);
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) out[i] = points_[i + 1] - points_[i];
  return out;
}

std::optional<std::size_t> Grid::index_of(double t, double tol) const {
  if (tol < 0.0) tol = 1e-9 * domain_.width();
  const std::size_t i = nearest_index(t);
  if (std::abs(points_[i] - t) <= tol) return i;
  return std::nullopt;
}

std::size_t Grid::nearest_index(double t) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it == points_.begin()) return 0;
  if (it == points_.end()) return points_.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - points_.begin());
  return (t - points_[hi - 1] <= points_[hi] - t) ? hi - 1 : hi;
}

Grid make_grid(const Domain& domain, std::size_t size) {
  if (size < 2) {
    throw Error(ErrorKind::invalid_argument,
                "grid size must be >= 2, got " + std::to_string(size));
  }
  std::vector<double> pts(size);
  const double step = domain.width() / static_cast<double>(size - 1);
  for (std::size_t i = 0; i < size; ++i) pts[i] = domain.lo() + step * static_cast<double>(i);
  pts.back() = domain.hi();
  return Grid(domain, std::move(pts));
}

// ---------------------------------------------------------------------------
// SparseSample

SparseSample::SparseSample(Domain domain, std::vector<SubjectRecord> subjects)
    : domain_(domain), subjects_(std::move(subjects)) {
  std::unordered_set<std::string> seen;
  for (auto& s : subjects_) {
    if (s.times.size() != s.values.size()) {
      throw Error(ErrorKind::data, "subject '" + s.id + "': times and values differ in length");
    }
    if (s.times.empty()) throw Error(ErrorKind::data, "subject '" + s.id + "' has no observations");
    if (!seen.insert(s.id).second) throw Error(ErrorKind::data, "duplicate subject id '" + s.id + "'");
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      if (!domain_.contains(s.times[j])) {
        throw Error(ErrorKind::data, "subject '" + s.id + "': time " + format_double(s.times[j]) +
                                         " outside domain");
      }
      if (!std::isfinite(s.values[j])) {
        throw Error(ErrorKind::data, "subject '" + s.id + "': non-finite value");
      }
    }
    if (!std::is_sorted(s.times.begin(), s.times.end())) {
      std::vector<std::size_t> order(s.times.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return s.times[a] < s.times[b]; });
      std::vector<double> t(order.size()), v(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) {
        t[k] = s.times[order[k]];
        v[k] = s.values[order[k]];
      }
      s.times = std::move(t);
      s.values = std::move(v);
    }
  }
}

std::size_t SparseSample::observation_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : subjects_) n += s.count();
  return n;
}

std::optional<std::size_t> SparseSample::find(std::string_view id) const {
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    if (subjects_[i].id == id) return i;
  }
  return std::nullopt;
}

SparseSample SparseSample::restricted_to(const Domain& domain) const {
  std::vector<SubjectRecord> kept;
  std::size_t dropped = 0;
  for (const auto& s : subjects_) {
    SubjectRecord r{s.id, {}, {}};
    for (std::size_t j = 0; j < s.count(); ++j) {
      if (domain.contains(s.times[j])) {
        r.times.push_back(s.times[j]);
        r.values.push_back(s.values[j]);
      }
    }
    if (r.times.empty()) {
      ++dropped;
    } else {
      kept.push_back(std::move(r));
    }
  }
  if (dropped > 0) {
    spdlog::warn("dropped {} subject(s) with no observations inside [{}, {}]", dropped,
                 domain.lo(), domain.hi());
  }
  if (kept.empty()) throw Error(ErrorKind::data, "no observations left inside the domain");
  return SparseSample(domain, std::move(kept));
}

SparseSample SparseSample::subset(std::span<const std::size_t> indices) const {
  std::vector<SubjectRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(subjects_.at(i));
  return SparseSample(domain_, std::move(out));
}

// ---------------------------------------------------------------------------
// ResponseVector

ResponseVector::ResponseVector(const SparseSample& sample,
                               std::vector<std::pair<std::string, double>> entries) {
  std::unordered_map<std::string, double> by_id;
  for (auto& [id, y] : entries) {
    if (!std::isfinite(y)) throw Error(ErrorKind::data, "non-finite response for subject '" + id + "'");
    if (!by_id.emplace(id, y).second) {
      throw Error(ErrorKind::data, "duplicate response for subject '" + id + "'");
    }
  }
  std::vector<std::string> missing;
  ids_.reserve(sample.size());
  values_.reserve(sample.size());
  for (const auto& s : sample.subjects()) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      missing.push_back(s.id);
      continue;
    }
    ids_.push_back(s.id);
    values_.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i > 0) list += ", ";
      list += missing[i];
    }
    throw Error(ErrorKind::data, "responses missing for subject(s): " + list);
  }
  mean_ = sparse_design::mean(values_);
}

ResponseVector::ResponseVector(std::vector<std::string> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (ids_.size() != values_.size()) {
    throw Error(ErrorKind::invalid_argument, "response ids and values differ in length");
  }
  if (values_.empty()) throw Error(ErrorKind::data, "empty response vector");
  mean_ = sparse_design::mean(values_);
}

double ResponseVector::variance() const { return sample_variance(values_); }

ResponseVector ResponseVector::subset(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  std::vector<double> vals;
  for (std::size_t i : indices) {
    ids.push_back(ids_.at(i));
    vals.push_back(values_.at(i));
  }
  return ResponseVector(std::move(ids), std::move(vals));
}

// ---------------------------------------------------------------------------
// Target / Design

std::string_view to_string(Target target) noexcept {
  return target == Target::trajectory ? "trajectory" : "response";
}

Target parse_target(std::string_view text) {
  if (text == "trajectory") return Target::trajectory;
  if (text == "response") return Target::response;
  throw Error(ErrorKind::invalid_argument,
              "target must be 'trajectory' or 'response', got '" + std::string(text) + "'");
}

Design Design::from_indices(const Grid& grid, std::vector<std::size_t> indices, Target target) {
  if (indices.empty()) throw Error(ErrorKind::invalid_argument, "design needs at least one point");
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw Error(ErrorKind::invalid_argument, "design points must be distinct");
  }
  if (indices.back() >= grid.size()) {
    throw Error(ErrorKind::invalid_argument, "design index outside the grid");
  }
  std::vector<double> times(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) times[k] = grid[indices[k]];
  return Design(std::move(indices), std::move(times), target);
}

Design Design::from_times(const Grid& grid, std::span<const double> times, Target target) {
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) {
    const auto i = grid.index_of(t);
    if (!i) {
      throw Error(ErrorKind::invalid_argument,
                  "design time " + format_double(t) + " is not a grid node");
    }
    idx.push_back(*i);
  }
  return from_indices(grid, std::move(idx), target);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

void check_header(std::string_view line, std::initializer_list<std::string_view> expected) {
  const auto fields = split_fields(line);
  bool ok = fields.size() == expected.size();
  std::size_t k = 0;
  for (auto want : expected) {
    if (!ok) break;
    ok = unquote(fields[k++]) == want;
  }
  if (!ok) {
    std::string want;
    for (auto w : expected) want += (want.empty() ? "" : ",") + std::string(w);
    throw Error(ErrorKind::parse, "row 1: expected header '" + want + "'");
  }
}

std::string strip_bom(std::string line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  return line;
}

}  // namespace

SparseSample read_longitudinal(std::istream& in, std::optional<Domain> domain) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "empty longitudinal file");
  check_header(strip_bom(line), {"subject_id", "time", "value"});

  std::vector<SubjectRecord> subjects;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t row = 1;
  double tmin = 0.0, tmax = 0.0;
  bool any = false;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": expected 3 fields");
    }
    const std::string id(unquote(fields[0]));
    const auto t = parse_number(fields[1]);
    const auto v = parse_number(fields[2]);
    if (id.empty() || !t || !v) {
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": malformed record");
    }
    if (domain && !domain->contains(*t)) {
      throw Error(ErrorKind::data, "row " + std::to_string(row) + ": time " + format_double(*t) +
                                       " outside domain");
    }
    auto [it, inserted] = index.emplace(id, subjects.size());
    if (inserted) subjects.push_back(SubjectRecord{id, {}, {}});
    auto& rec = subjects[it->second];
    rec.times.push_back(*t);
    rec.values.push_back(*v);
    tmin = any ? std::min(tmin, *t) : *t;
    tmax = any ? std::max(tmax, *t) : *t;
    any = true;
  }
  if (!any) throw Error(ErrorKind::parse, "longitudinal file has no data rows");
  if (!domain) domain = Domain(tmin, tmax);
  return SparseSample(*domain, std::move(subjects));
}

SparseSample load_longitudinal(const std::filesystem::path& path, std::optional<Domain> domain) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path.string() + "'");
  return read_longitudinal(in, domain);
}

void write_longitudinal(std::ostream& out, const SparseSample& sample) {
  out << "subject_id,time,value\n";
  for (const auto& s : sample.subjects()) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      out << s.id << ',' << format_double(s.times[j]) << ',' << format_double(s.values[j]) << '\n';
    }
  }
}

void save_longitudinal(const std::filesystem::path& path, const SparseSample& sample) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + path.string() + "'");
  write_longitudinal(out, sample);
}

ResponseVector read_responses(std::istream& in, const SparseSample& sample) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "empty response file");
  check_header(strip_bom(line), {"subject_id", "response"});
  std::vector<std::pair<std::string, double>> entries;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": expected 2 fields");
    }
    const auto y = parse_number(fields[1]);
    if (!y) throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": non-numeric response");
    entries.emplace_back(std::string(unquote(fields[0])), *y);
  }
  return ResponseVector(sample, std::move(entries));
}

ResponseVector load_responses(const std::filesystem::path& path, const SparseSample& sample) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path.string() + "'");
  return read_responses(in, sample);
}

void write_responses(std::ostream& out, const ResponseVector& responses) {
  out << "subject_id,response\n";
  for (std::size_t i = 0; i < responses.size(); ++i) {
    out << responses.ids()[i] << ',' << format_double(responses[i]) << '\n';
  }
}

}  // namespace sparse_design
