#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "prescale/synth.hpp"

using namespace prescale;

TEST_CASE("synthetic series is deterministic and in range") {
  auto params = default_synth_params();
  params.rows = 600;
  params.seed = 9;
  auto a = synth_series(params, "cat");
  auto b = synth_series(params, "cat");
  CHECK(a == b);
  REQUIRE(a.rows() == 600);
  REQUIRE(a.buckets() == 2);

  params.seed = 10;
  auto c = synth_series(params, "cat");
  CHECK_FALSE(a == c);
}

TEST_CASE("synthetic series shows its seasonality") {
  auto params = default_synth_params();
  params.rows = 4 * 288;
  params.seed = 12;
  params.buckets[0].bursts = 0;
  params.buckets[1].bursts = 0;
  auto s = synth_series(params, "cat");

  // peak region (season top) should dominate the trough region
  double peak = 0.0, trough = 0.0;
  int peak_n = 0, trough_n = 0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const int phase = static_cast<int>(r % 288);
    if (phase >= 60 && phase < 84) {  // near sin max for phase 0
      peak += static_cast<double>(s.at(r, 0));
      ++peak_n;
    }
    if (phase >= 204 && phase < 228) {
      trough += static_cast<double>(s.at(r, 0));
      ++trough_n;
    }
  }
  CHECK(peak / peak_n > 3.0 * (trough / trough_n + 1.0));
}

TEST_CASE("synthetic trace reproduces its series exactly") {
  auto params = default_synth_params();
  params.rows = 300;
  params.seed = 33;
  std::istringstream catstream(synth_catalog_csv());
  auto catalog = parse_catalog(catstream, params.tick_seconds);

  auto series = synth_series(params, "syncat");
  auto trace = synth_trace(series, catalog);
  for (const auto& j : trace.jobs) j.validate();

  auto resampled = sample_series(trace.jobs, catalog, params.tick_seconds, series.start_time(),
                                 series.tick_time(series.rows() - 1) + params.tick_seconds,
                                 "syncat");
  CHECK(resampled == series);
}

TEST_CASE("synthetic trace round trips through the trace file format") {
  auto params = default_synth_params();
  params.rows = 50;
  params.seed = 41;
  std::istringstream catstream(synth_catalog_csv());
  auto catalog = parse_catalog(catstream, params.tick_seconds);
  auto trace = synth_trace(synth_series(params, "syncat"), catalog);

  std::ostringstream out;
  save_trace(trace, out);
  std::istringstream in(out.str());
  auto loaded = ingest(in, "synth.csv");
  REQUIRE(loaded.jobs.size() == trace.jobs.size());
  for (std::size_t i = 0; i < trace.jobs.size(); ++i) {
    CHECK(loaded.jobs[i].job_id == trace.jobs[i].job_id);
    CHECK(loaded.jobs[i].submit_time == trace.jobs[i].submit_time);
    CHECK(loaded.jobs[i].end_time == trace.jobs[i].end_time);
    CHECK(loaded.jobs[i].demand == trace.jobs[i].demand);
  }
}
