#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/matrix.hpp"
#include "prescale/resources.hpp"

namespace prescale {

// Tick-indexed matrix of per-bucket instance counts. Row r holds the rounded
// counts observed at time start_time + r * tick_seconds.
class BucketCountSeries {
public:
  BucketCountSeries() = default;
  BucketCountSeries(int tick_seconds, std::int64_t start_time, std::size_t buckets,
                    std::string catalog_ref)
      : tick_seconds_(tick_seconds),
        start_time_(start_time),
        buckets_(buckets),
        catalog_ref_(std::move(catalog_ref)) {
    if (tick_seconds_ <= 0) throw Error("tick_seconds must be positive");
    if (buckets_ == 0) throw Error("series needs at least one bucket column");
  }

  int tick_seconds() const { return tick_seconds_; }
  std::int64_t start_time() const { return start_time_; }
  std::size_t buckets() const { return buckets_; }
  const std::string& catalog_ref() const { return catalog_ref_; }

  std::size_t rows() const { return counts_.size() / buckets_; }
  long long at(std::size_t row, std::size_t col) const { return counts_[row * buckets_ + col]; }

  void append_row(const std::vector<long long>& row) {
    if (row.size() != buckets_) throw ShapeError("series row width mismatch");
    for (long long v : row) {
      if (v < 0) throw Error("series counts must be non-negative");
      counts_.push_back(v);
    }
  }

  std::int64_t tick_time(std::size_t row) const {
    return start_time_ + static_cast<std::int64_t>(row) * tick_seconds_;
  }

  std::vector<long long> row(std::size_t r) const {
    return std::vector<long long>(counts_.begin() + r * buckets_,
                                  counts_.begin() + (r + 1) * buckets_);
  }

  // Rows [first, last) as a dense double matrix.
  Matrix to_matrix(std::size_t first, std::size_t last) const {
    Matrix m(static_cast<int>(last - first), static_cast<int>(buckets_));
    for (std::size_t r = first; r < last; ++r)
      for (std::size_t c = 0; c < buckets_; ++c)
        m(static_cast<int>(r - first), static_cast<int>(c)) = static_cast<double>(at(r, c));
    return m;
  }

  Matrix to_matrix() const { return to_matrix(0, rows()); }

  // Sub-series holding rows [first, last).
  BucketCountSeries slice(std::size_t first, std::size_t last) const {
    BucketCountSeries out(tick_seconds_, tick_time(first), buckets_, catalog_ref_);
    for (std::size_t r = first; r < last; ++r) out.append_row(row(r));
    return out;
  }

  bool operator==(const BucketCountSeries& o) const {
    return tick_seconds_ == o.tick_seconds_ && start_time_ == o.start_time_ &&
           buckets_ == o.buckets_ && catalog_ref_ == o.catalog_ref_ && counts_ == o.counts_;
  }

private:
  int tick_seconds_ = 300;
  std::int64_t start_time_ = 0;
  std::size_t buckets_ = 1;
  std::string catalog_ref_;
  std::vector<long long> counts_;
};

// Series file: one metadata header line, then `tick_index,count_0,...` rows.
inline void save_series(const BucketCountSeries& s, std::ostream& out) {
  out << "catalog=" << s.catalog_ref() << ",tick_seconds=" << s.tick_seconds()
      << ",start_time=" << s.start_time() << ",buckets=" << s.buckets() << "\n";
  for (std::size_t r = 0; r < s.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < s.buckets(); ++c) out << "," << s.at(r, c);
    out << "\n";
  }
}

inline void save_series(const BucketCountSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write series file: " + path);
  save_series(s, out);
}

inline BucketCountSeries load_series(std::istream& in, const std::string& source = "<series>") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  std::size_t lineno = 1;

  std::string catalog_ref;
  long long tick_seconds = -1, start_time = 0, buckets = -1;
  bool have_start = false;
  for (const auto& field : detail::split_csv(detail::trim(line))) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "bad header field: " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "catalog") catalog_ref = value;
    else if (key == "tick_seconds") tick_seconds = detail::parse_integer(value, source, lineno);
    else if (key == "start_time") { start_time = detail::parse_integer(value, source, lineno); have_start = true; }
    else if (key == "buckets") buckets = detail::parse_integer(value, source, lineno);
    else throw ParseError(source, lineno, "unknown header field: " + key);
  }
  if (tick_seconds <= 0 || buckets <= 0 || !have_start)
    throw ParseError(source, lineno, "header must set tick_seconds, start_time and buckets");

  BucketCountSeries s(static_cast<int>(tick_seconds), start_time,
                      static_cast<std::size_t>(buckets), catalog_ref);
  long long expected_tick = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto cells = detail::split_csv(t);
    if (cells.size() != static_cast<std::size_t>(buckets) + 1)
      throw ParseError(source, lineno, "row " + std::to_string(expected_tick) + " has " +
                                           std::to_string(cells.size() - 1) + " counts, expected " +
                                           std::to_string(buckets));
    if (detail::parse_integer(cells[0], source, lineno) != expected_tick)
      throw ParseError(source, lineno, "tick indices must be consecutive from 0");
    std::vector<long long> row(buckets);
    for (long long c = 0; c < buckets; ++c) {
      row[c] = detail::parse_integer(cells[c + 1], source, lineno);
      if (row[c] < 0) throw ParseError(source, lineno, "negative count");
    }
    s.append_row(row);
    ++expected_tick;
  }
  return s;
}

inline BucketCountSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open series file: " + path);
  return load_series(in, path);
}

}  // namespace prescale
