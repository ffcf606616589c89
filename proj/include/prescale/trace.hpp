#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/resources.hpp"
#include "prescale/series.hpp"

namespace prescale {

// One batch job: per-instance demand plus the number of identical instances
// it needs at once (gang_size > 1 for distributed jobs).
struct JobRecord {
  std::string job_id;
  std::int64_t submit_time = 0;  // epoch seconds
  std::int64_t end_time = 0;     // epoch seconds, exclusive
  ResourceVector demand;
  long long gang_size = 1;

  void validate() const {
    if (end_time <= submit_time)
      throw Error("job " + job_id + ": end_time must be after submit_time");
    if (gang_size < 1) throw Error("job " + job_id + ": gang_size must be >= 1");
  }

  bool running_at(std::int64_t t) const { return submit_time <= t && t < end_time; }
};

struct Trace {
  std::vector<std::string> dimension_names;
  std::vector<JobRecord> jobs;
};

// Trace file: header `job_id,submit,end,<dim>,...,gang_size`, then one job
// per row with integer epoch seconds.
inline Trace ingest(std::istream& in, const std::string& source = "<trace>") {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  ++lineno;
  auto header = detail::split_csv(detail::trim(line));
  if (header.size() < 5 || header[0] != "job_id" || header[1] != "submit" ||
      header[2] != "end" || header.back() != "gang_size")
    throw ParseError(source, lineno, "header must be job_id,submit,end,<dim>,...,gang_size");

  Trace trace;
  trace.dimension_names.assign(header.begin() + 3, header.end() - 1);
  const std::size_t dims = trace.dimension_names.size();

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto cells = detail::split_csv(t);
    if (cells.size() != header.size())
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) +
                                           " columns, got " + std::to_string(cells.size()));
    JobRecord rec;
    rec.job_id = cells[0];
    rec.submit_time = detail::parse_integer(cells[1], source, lineno);
    rec.end_time = detail::parse_integer(cells[2], source, lineno);
    std::vector<double> demand(dims);
    for (std::size_t d = 0; d < dims; ++d)
      demand[d] = detail::parse_number(cells[3 + d], source, lineno);
    try {
      rec.demand = ResourceVector(std::move(demand));
      rec.gang_size = detail::parse_integer(cells.back(), source, lineno);
      rec.validate();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
    trace.jobs.push_back(std::move(rec));
  }
  return trace;
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path);
  return ingest(in, path);
}

inline void save_trace(const Trace& trace, std::ostream& out) {
  out << "job_id,submit,end";
  for (const auto& d : trace.dimension_names) out << "," << d;
  out << ",gang_size\n";
  for (const auto& j : trace.jobs) {
    out << j.job_id << "," << j.submit_time << "," << j.end_time;
    for (std::size_t d = 0; d < j.demand.size(); ++d) out << "," << j.demand[d];
    out << "," << j.gang_size << "\n";
  }
}

inline void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file: " + path);
  save_trace(trace, out);
}

// Demand vectors of all jobs running at instant `t`, gangs expanded to
// gang_size identical copies.
inline std::vector<ResourceVector> snapshot_at(const std::vector<JobRecord>& jobs, std::int64_t t) {
  std::vector<ResourceVector> snap;
  for (const auto& j : jobs)
    if (j.running_at(t))
      for (long long g = 0; g < j.gang_size; ++g) snap.push_back(j.demand);
  return snap;
}

// Samples running-job snapshots at every tick in [start, end) and embeds each
// snapshot into rounded bucket counts. Jobs occupy [submit_time, end_time).
inline BucketCountSeries sample_series(const std::vector<JobRecord>& jobs,
                                       const BucketCatalog& catalog, int tick_seconds,
                                       std::int64_t start, std::int64_t end,
                                       const std::string& catalog_ref = "") {
  if (tick_seconds <= 0) throw Error("tick_seconds must be positive");
  if (start >= end) throw Error("sample range must satisfy start < end");
  for (const auto& j : jobs) j.validate();

  BucketCountSeries series(tick_seconds, start, catalog.size(), catalog_ref);
  std::size_t tick_index = 0;
  for (std::int64_t t = start; t < end; t += tick_seconds, ++tick_index) {
    const auto snap = snapshot_at(jobs, t);
    BucketCounts counts;
    try {
      counts = embed_requirements(snap, catalog);
    } catch (const UnpackableJobError& e) {
      throw UnpackableJobError("tick " + std::to_string(tick_index) + ": " + e.what());
    }
    series.append_row(counts.rounded);
  }
  return series;
}

}  // namespace prescale
