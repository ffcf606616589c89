#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "prescale/errors.hpp"

namespace prescale {

// One axis of the resource space. Dimension order encodes cost priority:
// the most expensive resource (typically GPU) comes first.
struct Dimension {
  std::string name;
  std::string unit;
};

class ResourceSpace {
public:
  ResourceSpace() = default;
  explicit ResourceSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw Error("resource space needs at least one dimension");
    for (std::size_t i = 0; i < dims_.size(); ++i)
      for (std::size_t j = i + 1; j < dims_.size(); ++j)
        if (dims_[i].name == dims_[j].name)
          throw Error("duplicate resource dimension: " + dims_[i].name);
  }

  static ResourceSpace from_names(const std::vector<std::string>& names) {
    std::vector<Dimension> dims;
    dims.reserve(names.size());
    for (const auto& n : names) dims.push_back({n, ""});
    return ResourceSpace(std::move(dims));
  }

  std::size_t size() const { return dims_.size(); }
  const Dimension& dim(std::size_t i) const { return dims_[i]; }
  const std::vector<Dimension>& dims() const { return dims_; }

  bool operator==(const ResourceSpace& o) const {
    if (dims_.size() != o.dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i].name != o.dims_[i].name) return false;
    return true;
  }

private:
  std::vector<Dimension> dims_;
};

// Per-job demand: one non-negative quantity per dimension, fractional allowed.
class ResourceVector {
public:
  ResourceVector() = default;
  explicit ResourceVector(std::vector<double> quantities) : q_(std::move(quantities)) { validate(); }
  ResourceVector(std::initializer_list<double> quantities) : q_(quantities) { validate(); }

  std::size_t size() const { return q_.size(); }
  double operator[](std::size_t i) const { return q_[i]; }
  const std::vector<double>& quantities() const { return q_; }

  bool operator==(const ResourceVector& o) const { return q_ == o.q_; }

  std::string to_string() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (i) os << ",";
      os << q_[i];
    }
    os << ")";
    return os.str();
  }

private:
  void validate() const {
    for (double v : q_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error("resource quantity must be finite and >= 0, got " + std::to_string(v));
  }

  std::vector<double> q_;
};

inline void require_same_space(const ResourceVector& a, const ResourceVector& b) {
  if (a.size() != b.size()) throw SpaceMismatchError(a.size(), b.size());
}

// Allocatable boundary equivalent to one cloud instance type.
struct ResourceBucket {
  ResourceVector boundary;
  std::string instance_type;
  double price_per_tick = 0.0;

  ResourceBucket() = default;
  ResourceBucket(ResourceVector b, std::string type, double price)
      : boundary(std::move(b)), instance_type(std::move(type)), price_per_tick(price) {
    bool any_positive = false;
    for (std::size_t i = 0; i < boundary.size(); ++i)
      if (boundary[i] > 0.0) any_positive = true;
    if (!any_positive) throw Error("bucket " + instance_type + " has an all-zero boundary");
    if (price_per_tick < 0.0) throw Error("bucket " + instance_type + " has a negative price");
  }
};

enum class Ordering { Less, Equal, Greater };

// Element-scan comparison: true iff some dimension of `a` is strictly smaller
// than the matching dimension of `b`, scanning left to right. The scan does
// not stop on a greater element, so (5,0) is "less" than (1,1). Equal vectors
// compare false. Kept as a plain relation; packing uses `fits` below.
inline bool any_less(const ResourceVector& a, const ResourceVector& b) {
  require_same_space(a, b);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < b[i]) return true;
  return false;
}

// Packing predicate: the job demand fits the bucket boundary component-wise
// (inclusive on every dimension).
inline bool fits(const ResourceVector& job, const ResourceBucket& bucket) {
  require_same_space(job, bucket.boundary);
  for (std::size_t i = 0; i < job.size(); ++i)
    if (job[i] > bucket.boundary[i]) return false;
  return true;
}

// Total lexicographic order over the cost-priority dimension order.
inline Ordering lex_compare(const ResourceVector& a, const ResourceVector& b) {
  require_same_space(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return Ordering::Less;
    if (a[i] > b[i]) return Ordering::Greater;
  }
  return Ordering::Equal;
}

inline bool lex_less(const ResourceVector& a, const ResourceVector& b) {
  return lex_compare(a, b) == Ordering::Less;
}

// Buckets sorted ascending by lexicographic boundary comparison. Boundaries
// must be pairwise distinct so the order is deterministic.
class BucketCatalog {
public:
  BucketCatalog() = default;
  BucketCatalog(ResourceSpace space, std::vector<ResourceBucket> buckets)
      : space_(std::move(space)), buckets_(std::move(buckets)) {
    for (const auto& b : buckets_)
      if (b.boundary.size() != space_.size())
        throw SpaceMismatchError(b.boundary.size(), space_.size());
    std::sort(buckets_.begin(), buckets_.end(), [](const ResourceBucket& a, const ResourceBucket& b) {
      return lex_less(a.boundary, b.boundary);
    });
    for (std::size_t i = 0; i + 1 < buckets_.size(); ++i)
      if (lex_compare(buckets_[i].boundary, buckets_[i + 1].boundary) == Ordering::Equal)
        throw Error("catalog buckets " + buckets_[i].instance_type + " and " +
                    buckets_[i + 1].instance_type + " share the same boundary");
  }

  const ResourceSpace& space() const { return space_; }
  const std::vector<ResourceBucket>& buckets() const { return buckets_; }
  std::size_t size() const { return buckets_.size(); }
  const ResourceBucket& operator[](std::size_t i) const { return buckets_[i]; }

  // Sub-catalog holding only instance types whose name starts with `prefix`
  // (family filter, e.g. "m5").
  BucketCatalog family(const std::string& prefix) const {
    std::vector<ResourceBucket> kept;
    for (const auto& b : buckets_)
      if (b.instance_type.rfind(prefix, 0) == 0) kept.push_back(b);
    return BucketCatalog(space_, std::move(kept));
  }

  BucketCatalog without_smallest() const {
    if (buckets_.empty()) throw Error("catalog is empty");
    return BucketCatalog(space_, std::vector<ResourceBucket>(buckets_.begin() + 1, buckets_.end()));
  }

private:
  ResourceSpace space_;
  std::vector<ResourceBucket> buckets_;
};

// Pre-rounding and rounded per-bucket instance counts.
struct BucketCounts {
  std::vector<double> raw;
  std::vector<long long> rounded;
};

// First-fit-increasing assignment: returns, per input job (original order),
// the index of the smallest bucket the job fits. Throws UnpackableJobError
// when some job fits nothing.
inline std::vector<std::size_t> assign_buckets(const std::vector<ResourceVector>& jobs,
                                               const BucketCatalog& catalog) {
  if (catalog.size() == 0) throw Error("catalog is empty");
  std::vector<std::size_t> assignment(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    bool placed = false;
    for (std::size_t b = 0; b < catalog.size(); ++b) {
      if (fits(jobs[j], catalog[b])) {
        assignment[j] = b;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw UnpackableJobError("#" + std::to_string(j) + " demand " + jobs[j].to_string());
  }
  return assignment;
}

// Embeds heterogeneous job demands into per-bucket instance counts:
// jobs are sorted ascending, placed first-fit into the ascending bucket list,
// and each bucket's count is its dominant resource ratio (demand sum over
// boundary, maximised across dimensions), rounded up to whole instances.
inline BucketCounts embed_requirements(const std::vector<ResourceVector>& jobs,
                                       const BucketCatalog& catalog) {
  if (catalog.size() == 0) throw Error("catalog is empty");
  const std::size_t dims = catalog.space().size();
  for (const auto& j : jobs)
    if (j.size() != dims) throw SpaceMismatchError(j.size(), dims);

  // Sorting does not change per-job assignments (buckets have no per-instance
  // capacity here), but keeps the procedure the documented first-fit
  // increasing scan.
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(jobs[a], jobs[b]); });

  std::vector<std::vector<double>> sums(catalog.size(), std::vector<double>(dims, 0.0));
  for (std::size_t oi : order) {
    bool placed = false;
    for (std::size_t b = 0; b < catalog.size(); ++b) {
      if (fits(jobs[oi], catalog[b])) {
        for (std::size_t d = 0; d < dims; ++d) sums[b][d] += jobs[oi][d];
        placed = true;
        break;
      }
    }
    if (!placed)
      throw UnpackableJobError("#" + std::to_string(oi) + " demand " + jobs[oi].to_string());
  }

  BucketCounts out;
  out.raw.resize(catalog.size(), 0.0);
  out.rounded.resize(catalog.size(), 0);
  for (std::size_t b = 0; b < catalog.size(); ++b) {
    double ratio = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double cap = catalog[b].boundary[d];
      if (cap > 0.0) ratio = std::max(ratio, sums[b][d] / cap);
      // cap == 0 implies sums[b][d] == 0, guaranteed by fits().
    }
    out.raw[b] = ratio;
    out.rounded[b] = static_cast<long long>(std::ceil(ratio));
  }
  return out;
}

// One elimination step of the base-instance search.
struct BaseInstanceStep {
  std::string smallest_type;  // smallest instance in the candidate catalog
  double scale = 0.0;         // price-weighted rounded counts over all snapshots
  bool committed = false;     // true when dropping this smallest did not raise the scale
};

struct BaseInstanceResult {
  std::string instance_type;
  std::vector<BaseInstanceStep> steps;
};

namespace detail {

inline double catalog_scale(const std::vector<std::vector<ResourceVector>>& snapshots,
                            const BucketCatalog& catalog) {
  double total = 0.0;
  for (const auto& snap : snapshots) {
    const BucketCounts counts = embed_requirements(snap, catalog);
    for (std::size_t b = 0; b < catalog.size(); ++b)
      total += static_cast<double>(counts.rounded[b]) * catalog[b].price_per_tick;
  }
  return total;
}

}  // namespace detail

// Drops the smallest instance type while doing so does not increase the
// price-weighted scale of the trace; returns the smallest surviving type.
// A drop that leaves some snapshot unpackable counts as a scale increase.
inline BaseInstanceResult select_base_instance(const std::vector<std::vector<ResourceVector>>& snapshots,
                                               const BucketCatalog& family) {
  if (family.size() == 0) throw Error("base-instance selection needs a non-empty family");
  if (snapshots.empty()) throw Error("base-instance selection needs at least one snapshot");

  BaseInstanceResult result;
  BucketCatalog current = family;
  double current_scale = detail::catalog_scale(snapshots, current);
  result.steps.push_back({current[0].instance_type, current_scale, false});

  while (current.size() > 1) {
    BucketCatalog candidate = current.without_smallest();
    double candidate_scale;
    try {
      candidate_scale = detail::catalog_scale(snapshots, candidate);
    } catch (const UnpackableJobError&) {
      break;
    }
    if (candidate_scale > current_scale) break;
    result.steps.back().committed = true;
    current = std::move(candidate);
    current_scale = candidate_scale;
    result.steps.push_back({current[0].instance_type, current_scale, false});
  }
  result.instance_type = current[0].instance_type;
  return result;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& s, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "not a number: '" + s + "'");
  }
}

inline long long parse_integer(const std::string& s, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "not an integer: '" + s + "'");
  }
}

}  // namespace detail

// Catalog file: a header `instance_type,<dim>,<dim>,...,price_per_hour`
// fixing the dimension order, then one bucket per row. Hourly prices are
// converted to per-tick prices with the supplied tick length.
inline BucketCatalog parse_catalog(std::istream& in, int tick_seconds,
                                   const std::string& source = "<catalog>") {
  if (tick_seconds <= 0) throw Error("tick_seconds must be positive");
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  ++lineno;
  auto header = detail::split_csv(detail::trim(line));
  if (header.size() < 3 || header.front() != "instance_type" || header.back() != "price_per_hour")
    throw ParseError(source, lineno,
                     "header must be instance_type,<dim>,...,price_per_hour");
  std::vector<std::string> dim_names(header.begin() + 1, header.end() - 1);
  ResourceSpace space = ResourceSpace::from_names(dim_names);

  std::vector<ResourceBucket> buckets;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto cells = detail::split_csv(t);
    if (cells.size() != header.size())
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) +
                                           " columns, got " + std::to_string(cells.size()));
    std::vector<double> qty(dim_names.size());
    for (std::size_t d = 0; d < dim_names.size(); ++d)
      qty[d] = detail::parse_number(cells[d + 1], source, lineno);
    const double hourly = detail::parse_number(cells.back(), source, lineno);
    try {
      buckets.emplace_back(ResourceVector(std::move(qty)), cells[0],
                           hourly * tick_seconds / 3600.0);
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return BucketCatalog(std::move(space), std::move(buckets));
}

inline BucketCatalog load_catalog(const std::string& path, int tick_seconds) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog file: " + path);
  return parse_catalog(in, tick_seconds, path);
}

}  // namespace prescale
