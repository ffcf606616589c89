#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "prescale/autoscaler.hpp"
#include "prescale/errors.hpp"
#include "prescale/metrics.hpp"
#include "prescale/predictor.hpp"
#include "prescale/resources.hpp"
#include "prescale/series.hpp"
#include "prescale/window.hpp"

namespace prescale {

enum class Policy { Predictive, OnDemand, StaticMax, Ladder, Oracle };

inline std::string policy_name(Policy p) {
  switch (p) {
    case Policy::Predictive: return "predictive";
    case Policy::OnDemand: return "on_demand";
    case Policy::StaticMax: return "static";
    case Policy::Ladder: return "ladder";
    case Policy::Oracle: return "oracle";
  }
  throw Error("unknown policy");
}

struct SimConfig {
  Policy policy = Policy::OnDemand;
  int launch_delay_ticks = 1;
  std::uint64_t seed = 0;
  std::size_t eval_start_row = 0;  // history is [0, eval_start_row)
  int window_len = 576;            // rows handed to a predictive model
  std::vector<long long> ladder_rungs = {2, 5, 10, 20, 50, 100};
  std::size_t ladder_lookback = 288;

  void validate() const {
    if (launch_delay_ticks < 0) throw ConfigError("launch_delay_ticks must be >= 0");
    if (eval_start_row < 1) throw ConfigError("eval_start_row must be >= 1");
  }
};

struct SimTickRow {
  std::size_t tick = 0;  // row index in the input series
  std::vector<long long> demand;
  std::vector<double> predicted;
  std::vector<long long> provisioned;   // ready capacity held during the tick
  std::vector<long long> placeholders;  // idle ready capacity above demand
};

// Per-bucket reconciliation counters. At the end of a run,
// initial_ready + requested = final_ready + final_inflight + released.
struct SimLedger {
  std::vector<long long> initial_ready;
  std::vector<long long> requested;
  std::vector<long long> released;
  std::vector<long long> final_ready;
  std::vector<long long> final_inflight;
};

struct SimReport {
  std::string model_name;
  std::string catalog_ref;
  int tick_seconds = 0;
  std::size_t eval_start_row = 0;
  std::size_t eval_rows = 0;
  int launch_delay_ticks = 0;
  std::uint64_t seed = 0;

  double mse_normalized = 0.0;
  double pmse_normalized = 0.0;
  double mse_raw = 0.0;
  double pmse_raw = 0.0;
  double total_cost = 0.0;
  long long violation_ticks = 0;
  double mean_pending_ticks = 0.0;
  std::optional<double> train_seconds;

  std::vector<SimTickRow> per_tick;
  SimLedger ledger;
};

// Deterministic replay of the monitor -> predictor -> placeholder -> scale-up
// loop over a recorded series. Per tick: launched instances arrive, demand is
// checked against ready capacity (violations and pending exposure), cost
// accrues on everything held, then the policy picks the next tick's target;
// surplus placeholders release instantly but capacity never drops below the
// currently running jobs.
inline SimReport run(const BucketCountSeries& series, const BucketCatalog& catalog,
                     const SimConfig& cfg, const ForecastModel* model = nullptr) {
  cfg.validate();
  const std::size_t rows = series.rows();
  const std::size_t buckets = series.buckets();
  if (catalog.size() != buckets) throw ShapeError("catalog size does not match series width");
  if (cfg.eval_start_row >= rows) throw Error("eval_start_row is past the end of the series");

  if (cfg.policy == Policy::Predictive) {
    if (model == nullptr) throw Error("predictive policy needs a fitted model");
    if (cfg.eval_start_row < static_cast<std::size_t>(cfg.window_len))
      throw Error("insufficient history for the predictive policy: need " +
                  std::to_string(cfg.window_len) + " rows before eval_start_row");
  }

  // Normalized metrics use the scale of the history range, like training.
  const Matrix all = series.to_matrix();
  const ColumnScaler scaler = ColumnScaler::fit(all, 0, static_cast<int>(cfg.eval_start_row));

  std::vector<double> static_target(buckets, 0.0);
  for (std::size_t r = 0; r < cfg.eval_start_row; ++r)
    for (std::size_t c = 0; c < buckets; ++c)
      static_target[c] = std::max(static_target[c], static_cast<double>(series.at(r, c)));

  auto forecast_for = [&](std::size_t t) -> std::vector<double> {
    // Policy view at tick t of the demand at t + 1.
    switch (cfg.policy) {
      case Policy::Predictive: {
        Matrix window(cfg.window_len, static_cast<int>(buckets));
        for (int r = 0; r < cfg.window_len; ++r) {
          const std::size_t row = t + 1 - cfg.window_len + r;
          for (std::size_t c = 0; c < buckets; ++c)
            window(r, static_cast<int>(c)) = static_cast<double>(series.at(row, c));
        }
        return model->predict_next(window);
      }
      case Policy::OnDemand: {
        std::vector<double> f(buckets);
        for (std::size_t c = 0; c < buckets; ++c) f[c] = static_cast<double>(series.at(t, c));
        return f;
      }
      case Policy::StaticMax:
        return static_target;
      case Policy::Ladder: {
        std::vector<long long> recent(buckets, 0);
        const std::size_t first = t + 1 >= cfg.ladder_lookback ? t + 1 - cfg.ladder_lookback : 0;
        for (std::size_t r = first; r <= t; ++r)
          for (std::size_t c = 0; c < buckets; ++c) recent[c] = std::max(recent[c], series.at(r, c));
        const LadderResult ladder = ladder_policy(recent, cfg.ladder_rungs);
        std::vector<double> f(buckets);
        for (std::size_t c = 0; c < buckets; ++c) f[c] = static_cast<double>(ladder.targets[c]);
        return f;
      }
      case Policy::Oracle: {
        std::vector<double> f(buckets);
        for (std::size_t c = 0; c < buckets; ++c) f[c] = static_cast<double>(series.at(t + 1, c));
        return f;
      }
    }
    throw Error("unknown policy");
  };

  SimReport report;
  report.model_name = cfg.policy == Policy::Predictive ? model->name() : policy_name(cfg.policy);
  report.catalog_ref = series.catalog_ref();
  report.tick_seconds = series.tick_seconds();
  report.eval_start_row = cfg.eval_start_row;
  report.eval_rows = rows - cfg.eval_start_row;
  report.launch_delay_ticks = cfg.launch_delay_ticks;
  report.seed = cfg.seed;

  std::vector<long long> ready = series.row(cfg.eval_start_row);
  report.ledger.initial_ready = ready;
  report.ledger.requested.assign(buckets, 0);
  report.ledger.released.assign(buckets, 0);
  std::map<std::size_t, std::vector<long long>> arrivals;  // due tick -> counts
  std::vector<long long> inflight(buckets, 0);

  std::vector<std::vector<double>> actual_raw, predicted_raw, actual_norm, predicted_norm;
  std::vector<double> next_predicted;  // forecast made at t for t + 1

  long long pending_instance_ticks = 0;
  long long demand_instance_ticks = 0;

  for (std::size_t t = cfg.eval_start_row; t < rows; ++t) {
    // 1. launched instances become schedulable
    if (auto it = arrivals.find(t); it != arrivals.end()) {
      for (std::size_t c = 0; c < buckets; ++c) {
        ready[c] += it->second[c];
        inflight[c] -= it->second[c];
      }
      arrivals.erase(it);
    }

    // 2. demand vs ready capacity. A shortfall makes the pending jobs trigger
    // an on-demand scale-up right away (on top of whatever is already in
    // flight); with launch_delay 0 those instances are schedulable within the
    // same tick, so no violation is recorded.
    const std::vector<long long> demand = series.row(t);
    for (std::size_t c = 0; c < buckets; ++c) {
      const long long reactive = std::max(0LL, demand[c] - ready[c] - inflight[c]);
      if (reactive > 0) {
        report.ledger.requested[c] += reactive;
        if (cfg.launch_delay_ticks == 0) {
          ready[c] += reactive;
        } else {
          auto& due = arrivals[t + cfg.launch_delay_ticks];
          if (due.empty()) due.assign(buckets, 0);
          due[c] += reactive;
          inflight[c] += reactive;
        }
      }
    }
    bool violated = false;
    for (std::size_t c = 0; c < buckets; ++c) {
      const long long short_c = std::max(0LL, demand[c] - ready[c]);
      if (short_c > 0) violated = true;
      pending_instance_ticks += short_c;
      demand_instance_ticks += demand[c];
    }
    if (violated) ++report.violation_ticks;

    // metric pairs for ticks that had a forecast
    if (t > cfg.eval_start_row) {
      std::vector<double> actual(buckets);
      for (std::size_t c = 0; c < buckets; ++c) actual[c] = static_cast<double>(demand[c]);
      actual_raw.push_back(actual);
      predicted_raw.push_back(next_predicted);
      actual_norm.push_back(scaler.normalize_row(actual));
      predicted_norm.push_back(scaler.normalize_row(next_predicted));
    }

    // 3. cost of everything held during this tick. Shortfall demand is billed
    // as if served: instances that arrive late defer their cost, they do not
    // erase it. With launch_delay <= 1 this makes the clairvoyant oracle the
    // cheapest possible policy.
    for (std::size_t c = 0; c < buckets; ++c)
      report.total_cost +=
          static_cast<double>(std::max(ready[c], demand[c])) * catalog[c].price_per_tick;

    SimTickRow row;
    row.tick = t;
    row.demand = demand;
    row.predicted = t == cfg.eval_start_row
                        ? std::vector<double>(demand.begin(), demand.end())
                        : next_predicted;
    row.provisioned = ready;
    row.placeholders.resize(buckets);
    for (std::size_t c = 0; c < buckets; ++c)
      row.placeholders[c] = std::max(0LL, ready[c] - demand[c]);
    report.per_tick.push_back(std::move(row));

    // 4. plan capacity for t + 1
    if (t + 1 < rows) {
      const std::vector<double> forecast = forecast_for(t);
      const std::vector<long long> delta = compute_delta(forecast, demand);
      std::vector<long long> target(buckets);
      for (std::size_t c = 0; c < buckets; ++c) target[c] = demand[c] + delta[c];
      next_predicted = forecast;

      for (std::size_t c = 0; c < buckets; ++c) {
        // release surplus placeholders instantly, never below running jobs
        const long long keep = std::max(target[c], demand[c]);
        if (ready[c] > keep) {
          report.ledger.released[c] += ready[c] - keep;
          ready[c] = keep;
        }
        const long long need = target[c] - ready[c] - inflight[c];
        if (need > 0) {
          report.ledger.requested[c] += need;
          if (cfg.launch_delay_ticks == 0) {
            ready[c] += need;
          } else {
            auto& due = arrivals[t + cfg.launch_delay_ticks];
            if (due.empty()) due.assign(buckets, 0);
            due[c] += need;
            inflight[c] += need;
          }
        }
      }
    }
  }

  report.ledger.final_ready = ready;
  report.ledger.final_inflight = inflight;

  report.mse_raw = mse(actual_raw, predicted_raw);
  report.pmse_raw = pmse(actual_raw, predicted_raw);
  report.mse_normalized = mse(actual_norm, predicted_norm);
  report.pmse_normalized = pmse(actual_norm, predicted_norm);
  report.mean_pending_ticks =
      demand_instance_ticks == 0
          ? 0.0
          : static_cast<double>(pending_instance_ticks) / static_cast<double>(demand_instance_ticks);
  return report;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

// Summary block, one key per line. Deterministic formatting so identical runs
// produce identical bytes.
inline void write_report_summary(const SimReport& r, std::ostream& out) {
  out << "model = " << r.model_name << "\n";
  out << "catalog = " << r.catalog_ref << "\n";
  out << "tick_seconds = " << r.tick_seconds << "\n";
  out << "eval_start_row = " << r.eval_start_row << "\n";
  out << "eval_rows = " << r.eval_rows << "\n";
  out << "launch_delay_ticks = " << r.launch_delay_ticks << "\n";
  out << "seed = " << r.seed << "\n";
  out << "mse_normalized = " << detail::fmt_double(r.mse_normalized) << "\n";
  out << "pmse_normalized = " << detail::fmt_double(r.pmse_normalized) << "\n";
  out << "mse_raw = " << detail::fmt_double(r.mse_raw) << "\n";
  out << "pmse_raw = " << detail::fmt_double(r.pmse_raw) << "\n";
  out << "total_cost = " << detail::fmt_double(r.total_cost) << "\n";
  out << "violation_ticks = " << r.violation_ticks << "\n";
  out << "mean_pending_ticks = " << detail::fmt_double(r.mean_pending_ticks) << "\n";
  if (r.train_seconds) out << "train_seconds = " << detail::fmt_double(*r.train_seconds) << "\n";
  out << "# violation_ticks and mean_pending_ticks extend the accuracy metrics;\n";
  out << "# they are produced by this simulator, not part of the mse/pmse protocol.\n";
}

inline void write_report_ticks(const SimReport& r, std::ostream& out) {
  const std::size_t buckets = r.per_tick.empty() ? 0 : r.per_tick.front().demand.size();
  out << "tick";
  for (std::size_t c = 0; c < buckets; ++c) out << ",demand_" << c;
  for (std::size_t c = 0; c < buckets; ++c) out << ",predicted_" << c;
  for (std::size_t c = 0; c < buckets; ++c) out << ",provisioned_" << c;
  for (std::size_t c = 0; c < buckets; ++c) out << ",placeholders_" << c;
  out << "\n";
  for (const auto& row : r.per_tick) {
    out << row.tick;
    for (long long v : row.demand) out << "," << v;
    for (double v : row.predicted) out << "," << detail::fmt_double(v);
    for (long long v : row.provisioned) out << "," << v;
    for (long long v : row.placeholders) out << "," << v;
    out << "\n";
  }
}

// Comparison across policies on the same trace/configuration (mismatched
// runs are rejected).
struct ComparisonTable {
  std::vector<SimReport> rows;
};

inline ComparisonTable compare(const std::vector<SimReport>& reports) {
  if (reports.empty()) throw Error("compare needs at least one report");
  const SimReport& first = reports.front();
  for (const auto& r : reports) {
    if (r.catalog_ref != first.catalog_ref || r.tick_seconds != first.tick_seconds ||
        r.eval_start_row != first.eval_start_row || r.eval_rows != first.eval_rows ||
        r.launch_delay_ticks != first.launch_delay_ticks)
      throw Error("compare: reports come from different trace or simulator configurations");
  }
  ComparisonTable table;
  table.rows = reports;
  return table;
}

inline void write_comparison_csv(const ComparisonTable& table, std::ostream& out) {
  out << "model,mse_normalized,pmse_normalized,mse_raw,pmse_raw,total_cost,violation_ticks,"
         "mean_pending_ticks,train_seconds\n";
  for (const auto& r : table.rows) {
    out << r.model_name << "," << detail::fmt_double(r.mse_normalized) << ","
        << detail::fmt_double(r.pmse_normalized) << "," << detail::fmt_double(r.mse_raw) << ","
        << detail::fmt_double(r.pmse_raw) << "," << detail::fmt_double(r.total_cost) << ","
        << r.violation_ticks << "," << detail::fmt_double(r.mean_pending_ticks) << ","
        << (r.train_seconds ? detail::fmt_double(*r.train_seconds) : "-") << "\n";
  }
}

inline void write_comparison_text(const ComparisonTable& table, std::ostream& out) {
  auto fmt_sci = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4e", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"model", "mse", "pmse", "cost", "violations", "pending", "train_s"});
  for (const auto& r : table.rows) {
    cells.push_back({r.model_name, fmt_sci(r.mse_normalized), fmt_sci(r.pmse_normalized),
                     fmt_sci(r.total_cost), std::to_string(r.violation_ticks),
                     fmt_sci(r.mean_pending_ticks),
                     r.train_seconds ? fmt_sci(*r.train_seconds) : "-"});
  }
  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size()) out << std::string(widths[c] - row[c].size() + 2, ' ');
    }
    out << "\n";
  }
}

}  // namespace prescale
