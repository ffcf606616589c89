#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/resources.hpp"
#include "prescale/series.hpp"
#include "prescale/trace.hpp"

namespace prescale {

// One synthetic bucket-count channel: seasonal level plus trend, on-and-off
// bursts and multiplicative gaussian noise.
struct SynthBucket {
  double base = 8.0;
  double amplitude = 30.0;
  double trend_per_tick = 0.0005;
  double noise_frac = 0.05;
  double phase_ticks = 0.0;
  int bursts = 0;
  double burst_height = 0.0;
  int burst_len_ticks = 12;
};

struct SynthParams {
  int tick_seconds = 300;
  std::int64_t start_time = 1609459200;  // tick-aligned so re-ingesting a trace lines up
  int rows = 32 * 288;
  int period_ticks = 288;
  std::uint64_t seed = 0;
  std::vector<SynthBucket> buckets;

  void validate() const {
    if (tick_seconds <= 0 || rows <= 0 || period_ticks <= 0)
      throw ConfigError("synthetic generator needs positive tick, rows and period");
    if (buckets.empty()) throw ConfigError("synthetic generator needs at least one bucket");
  }
};

// Two channels echoing a widely used CPU bucket and a rarely used GPU bucket.
inline SynthParams default_synth_params() {
  SynthParams p;
  SynthBucket wide;
  wide.base = 8.0;
  wide.amplitude = 30.0;
  wide.trend_per_tick = 0.0005;
  wide.noise_frac = 0.05;
  wide.phase_ticks = 0.0;
  wide.bursts = 6;
  wide.burst_height = 6.0;
  wide.burst_len_ticks = 18;
  SynthBucket rare;
  rare.base = 1.0;
  rare.amplitude = 6.0;
  rare.trend_per_tick = 0.0001;
  rare.noise_frac = 0.05;
  rare.phase_ticks = 96.0;
  rare.bursts = 4;
  rare.burst_height = 3.0;
  rare.burst_len_ticks = 12;
  p.buckets = {wide, rare};
  return p;
}

// Catalog matching default_synth_params(): integer boundaries so that jobs
// whose demand equals a boundary embed into exact integer counts.
inline std::string synth_catalog_csv() {
  return "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
         "m5.2xlarge,0,8,32,0.384\n"
         "g4.2xlarge,1,8,32,0.752\n";
}

inline BucketCountSeries synth_series(const SynthParams& p, const std::string& catalog_ref) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> burst_start(0, p.rows - 1);

  const std::size_t buckets = p.buckets.size();
  std::vector<std::vector<double>> burst_add(buckets, std::vector<double>(p.rows, 0.0));
  for (std::size_t b = 0; b < buckets; ++b) {
    const SynthBucket& sb = p.buckets[b];
    for (int k = 0; k < sb.bursts; ++k) {
      const int start = burst_start(rng);
      for (int t = start; t < std::min(p.rows, start + sb.burst_len_ticks); ++t)
        burst_add[b][t] += sb.burst_height;
    }
  }

  BucketCountSeries series(p.tick_seconds, p.start_time, buckets, catalog_ref);
  std::vector<long long> row(buckets);
  for (int t = 0; t < p.rows; ++t) {
    for (std::size_t b = 0; b < buckets; ++b) {
      const SynthBucket& sb = p.buckets[b];
      const double season =
          0.5 * (1.0 + std::sin(2.0 * M_PI * (t + sb.phase_ticks) / p.period_ticks));
      const double level = sb.base + sb.trend_per_tick * t + sb.amplitude * season;
      const double noisy = level + burst_add[b][t] + gauss(rng) * sb.noise_frac * level;
      row[b] = std::max(0LL, static_cast<long long>(std::llround(noisy)));
    }
    series.append_row(row);
  }
  return series;
}

// Realizes a count series as job events: each bucket column becomes a stack
// of jobs whose demand equals the bucket boundary, opened when the count
// rises and closed when it falls. Sampling the result with the same catalog
// and tick grid reproduces the series exactly (boundaries never fit a
// smaller bucket, and integer boundaries keep the ratios exact).
inline Trace synth_trace(const BucketCountSeries& series, const BucketCatalog& catalog) {
  if (catalog.size() != series.buckets())
    throw ShapeError("catalog size does not match series width");
  Trace trace;
  for (const auto& d : catalog.space().dims()) trace.dimension_names.push_back(d.name);

  for (std::size_t b = 0; b < series.buckets(); ++b) {
    std::vector<std::size_t> open;  // indices into trace.jobs
    long long serial = 0;
    for (std::size_t r = 0; r < series.rows(); ++r) {
      const long long want = series.at(r, b);
      const std::int64_t now = series.tick_time(r);
      while (static_cast<long long>(open.size()) < want) {
        JobRecord job;
        job.job_id = "synth-b" + std::to_string(b) + "-" + std::to_string(serial++);
        job.submit_time = now;
        job.end_time = now + 1;  // fixed up on close
        job.demand = catalog[b].boundary;
        job.gang_size = 1;
        open.push_back(trace.jobs.size());
        trace.jobs.push_back(std::move(job));
      }
      while (static_cast<long long>(open.size()) > want) {
        trace.jobs[open.back()].end_time = now;
        open.pop_back();
      }
    }
    const std::int64_t close = series.tick_time(series.rows() - 1) + series.tick_seconds();
    for (std::size_t idx : open) trace.jobs[idx].end_time = close;
  }
  for (auto& j : trace.jobs) j.validate();
  return trace;
}

}  // namespace prescale
