// prescale: trace-driven predictive autoscaling toolkit.
//
// Subcommands cover the whole loop: ingest a job trace into bucket-count
// series, inspect embeddings, pick a base instance, train the forecaster,
// turn forecasts into scaling plans, and replay everything in the simulator.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prescale/arma.hpp"
#include "prescale/autoscaler.hpp"
#include "prescale/config.hpp"
#include "prescale/holt_winters.hpp"
#include "prescale/metrics.hpp"
#include "prescale/predictor.hpp"
#include "prescale/resources.hpp"
#include "prescale/series.hpp"
#include "prescale/sim.hpp"
#include "prescale/synth.hpp"
#include "prescale/trace.hpp"
#include "prescale/transformer.hpp"

namespace fs = std::filesystem;
using namespace prescale;

namespace {

const std::set<std::string>& config_schema() {
  static const std::set<std::string> schema = {
      // paths (flags override)
      "trace", "catalog", "series", "checkpoint", "groups", "out_dir",
      // core
      "tick_seconds", "window_len", "periods", "train_fraction", "seed",
      // transformer
      "d_model", "heads", "encoder_layers", "decoder_layers", "dropout", "warmup_steps",
      "batch_size", "train_steps",
      // seasonal exponential smoothing
      "hw_alpha", "hw_beta", "hw_gamma", "hw_season",
      // arma
      "arma_p", "arma_q",
      // simulator / autoscaler
      "launch_delay_ticks", "ladder_rungs", "ladder_lookback", "vi_max_size",
      // synthetic generator
      "synth_days", "synth_period", "synth_noise_frac", "synth_trend", "synth_bursts",
  };
  return schema;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::string out_dir = ".";
  long long seed = -1;  // -1: keep config value
};

ConfigMap resolve_config(const CommonArgs& args) {
  ConfigMap cfg;
  if (!args.config_path.empty()) cfg = ConfigMap::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (args.seed >= 0) cfg.set("seed", std::to_string(args.seed));
  cfg.require_known(config_schema());
  return cfg;
}

fs::path out_path(const CommonArgs& args, const ConfigMap& cfg, const std::string& name) {
  const fs::path dir = args.out_dir != "." ? fs::path(args.out_dir)
                                           : fs::path(cfg.get_string("out_dir", "."));
  fs::create_directories(dir);
  return dir / name;
}

std::vector<int> periods_from(const ConfigMap& cfg) {
  std::vector<int> periods;
  for (long long p : cfg.get_int_list("periods", {2016, 288})) periods.push_back(static_cast<int>(p));
  return periods;
}

TransformerConfig transformer_config(const ConfigMap& cfg) {
  TransformerConfig t;
  t.d_model = static_cast<int>(cfg.get_int("d_model", 64));
  t.heads = static_cast<int>(cfg.get_int("heads", 4));
  t.encoder_layers = static_cast<int>(cfg.get_int("encoder_layers", 6));
  t.decoder_layers = static_cast<int>(cfg.get_int("decoder_layers", 6));
  t.dropout = cfg.get_double("dropout", 0.2);
  t.warmup_steps = static_cast<int>(cfg.get_int("warmup_steps", 5000));
  t.batch_size = static_cast<int>(cfg.get_int("batch_size", 32));
  t.train_steps = static_cast<int>(cfg.get_int("train_steps", 2000));
  t.window_len = static_cast<int>(cfg.get_int("window_len", 576));
  t.periods = periods_from(cfg);
  t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  t.validate();
  return t;
}

HoltWintersParams hw_params(const ConfigMap& cfg) {
  HoltWintersParams p;
  p.alpha = cfg.get_double("hw_alpha", 0.5);
  p.beta = cfg.get_double("hw_beta", 0.001);
  p.gamma = cfg.get_double("hw_gamma", 0.3);
  p.season = static_cast<int>(cfg.get_int("hw_season", 2016));
  p.validate();
  return p;
}

ArmaParams arma_params(const ConfigMap& cfg) {
  ArmaParams p;
  p.p = static_cast<int>(cfg.get_int("arma_p", 7));
  p.q = static_cast<int>(cfg.get_int("arma_q", 7));
  p.validate();
  return p;
}

Trace load_trace_checked(const std::string& path, const BucketCatalog& catalog) {
  Trace trace = load_trace(path);
  std::vector<std::string> expected;
  for (const auto& d : catalog.space().dims()) expected.push_back(d.name);
  if (trace.dimension_names != expected)
    throw Error("trace dimensions do not match the catalog: trace has [" +
                [&] {
                  std::string s;
                  for (const auto& n : trace.dimension_names) s += (s.empty() ? "" : ",") + n;
                  return s;
                }() +
                "], catalog expects the same names in the same order");
  return trace;
}

Matrix tail_window(const BucketCountSeries& series, int window_len) {
  if (series.rows() < static_cast<std::size_t>(window_len))
    throw Error("series has " + std::to_string(series.rows()) + " rows, need " +
                std::to_string(window_len) + " for one window");
  return series.to_matrix(series.rows() - window_len, series.rows());
}

// Fits the model named `name` on the history slice and wires the matching
// simulator policy. `fit_seconds` reports in-process fitting time; loading a
// checkpoint leaves it unset.
struct PolicySetup {
  SimConfig sim;
  std::unique_ptr<ForecastModel> model;  // null for model-free policies
  std::optional<double> fit_seconds;
};

PolicySetup setup_policy(const std::string& name, const ConfigMap& cfg,
                         const BucketCountSeries& series, std::size_t eval_start,
                         const std::string& checkpoint_path) {
  PolicySetup out;
  out.sim.eval_start_row = eval_start;
  out.sim.launch_delay_ticks = static_cast<int>(cfg.get_int("launch_delay_ticks", 1));
  out.sim.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  out.sim.window_len = static_cast<int>(cfg.get_int("window_len", 576));
  out.sim.ladder_rungs = cfg.get_int_list("ladder_rungs", {2, 5, 10, 20, 50, 100});
  out.sim.ladder_lookback = static_cast<std::size_t>(cfg.get_int("ladder_lookback", 288));

  const auto fit_timed = [&](ForecastModel& model) {
    const auto t0 = std::chrono::steady_clock::now();
    model.fit(series.slice(0, eval_start));
    const auto t1 = std::chrono::steady_clock::now();
    out.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  };

  if (name == "on_demand") {
    out.sim.policy = Policy::OnDemand;
  } else if (name == "oracle") {
    out.sim.policy = Policy::Oracle;
  } else if (name == "ladder") {
    out.sim.policy = Policy::Ladder;
  } else if (name == "static") {
    out.sim.policy = Policy::StaticMax;
  } else if (name == "holt_winters") {
    out.sim.policy = Policy::Predictive;
    const HoltWintersParams p = hw_params(cfg);
    if (out.sim.window_len < 2 * p.season)
      throw Error("holt_winters needs window_len >= 2*hw_season (" + std::to_string(2 * p.season) +
                  "); raise window_len or lower hw_season");
    auto model = std::make_unique<HoltWintersModel>(p);
    fit_timed(*model);
    out.model = std::move(model);
  } else if (name == "arma") {
    out.sim.policy = Policy::Predictive;
    auto model = std::make_unique<ArmaModel>(arma_params(cfg));
    fit_timed(*model);
    out.model = std::move(model);
  } else if (name == "transformer") {
    out.sim.policy = Policy::Predictive;
    if (!checkpoint_path.empty()) {
      auto model = std::make_unique<TransformerModel>(load_checkpoint(checkpoint_path));
      out.sim.window_len = model->config().window_len;
      out.model = std::move(model);
    } else {
      auto model = std::make_unique<TransformerModel>(transformer_config(cfg));
      out.sim.window_len = model->config().window_len;
      fit_timed(*model);
      out.model = std::move(model);
    }
  } else {
    throw Error("unknown policy '" + name +
                "'; expected one of on_demand, oracle, ladder, static, holt_winters, arma, "
                "transformer");
  }
  return out;
}

std::size_t eval_start_for(const ConfigMap& cfg, const BucketCountSeries& series) {
  const double fraction = cfg.get_double("train_fraction", 0.9);
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ConfigError("train_fraction must lie in (0, 1) for simulation");
  const auto start = static_cast<std::size_t>(static_cast<double>(series.rows()) * fraction);
  if (start < 1 || start + 1 >= series.rows())
    throw Error("series too short to split at train_fraction");
  return start;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_synth(const CommonArgs& common, const std::string& emit) {
  const ConfigMap cfg = resolve_config(common);
  SynthParams params = default_synth_params();
  params.tick_seconds = static_cast<int>(cfg.get_int("tick_seconds", 300));
  const int ticks_per_day = 86400 / params.tick_seconds;
  params.rows = static_cast<int>(cfg.get_int("synth_days", 32)) * ticks_per_day;
  params.period_ticks = static_cast<int>(cfg.get_int("synth_period", 288));
  params.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const double noise = cfg.get_double("synth_noise_frac", 0.05);
  const double trend = cfg.get_double("synth_trend", -1.0);
  const long long bursts = cfg.get_int("synth_bursts", -1);
  for (auto& b : params.buckets) {
    b.noise_frac = noise;
    if (trend >= 0.0) b.trend_per_tick = trend;
    if (bursts >= 0) b.bursts = static_cast<int>(bursts);
  }

  const fs::path catalog_path = out_path(common, cfg, "synthetic_catalog.csv");
  write_text_file(catalog_path, synth_catalog_csv());

  const auto series = synth_series(params, catalog_path.filename().string());
  if (emit == "series" || emit == "both") {
    const fs::path p = out_path(common, cfg, "synthetic_series.csv");
    save_series(series, p.string());
    std::cout << "wrote " << p.string() << " (" << series.rows() << " rows x " << series.buckets()
              << " buckets)\n";
  }
  if (emit == "trace" || emit == "both") {
    std::ifstream in(catalog_path);
    const auto catalog = parse_catalog(in, params.tick_seconds, catalog_path.string());
    const Trace trace = synth_trace(series, catalog);
    const fs::path p = out_path(common, cfg, "synthetic_trace.csv");
    save_trace(trace, p.string());
    std::cout << "wrote " << p.string() << " (" << trace.jobs.size() << " jobs)\n";
  }
  std::cout << "wrote " << catalog_path.string() << "\n";
  return 0;
}

int cmd_ingest(const CommonArgs& common, const std::string& trace_path,
               const std::string& catalog_path, long long start, long long end) {
  const ConfigMap cfg = resolve_config(common);
  const int tick = static_cast<int>(cfg.get_int("tick_seconds", 300));
  const auto catalog = load_catalog(catalog_path.empty() ? cfg.get_string("catalog", "") : catalog_path, tick);
  const Trace trace = load_trace_checked(trace_path.empty() ? cfg.get_string("trace", "") : trace_path, catalog);
  if (trace.jobs.empty()) throw Error("trace holds no jobs; nothing to sample");

  std::int64_t lo = trace.jobs.front().submit_time, hi = trace.jobs.front().end_time;
  for (const auto& j : trace.jobs) {
    lo = std::min(lo, j.submit_time);
    hi = std::max(hi, j.end_time);
  }
  const std::int64_t range_start = start >= 0 ? start : (lo / tick) * tick;
  const std::int64_t range_end = end >= 0 ? end : ((hi + tick - 1) / tick) * tick;

  const auto series = sample_series(trace.jobs, catalog, tick, range_start, range_end,
                                    fs::path(catalog_path).filename().string());
  const fs::path p = out_path(common, cfg, "series.csv");
  save_series(series, p.string());
  std::cout << "wrote " << p.string() << " (" << series.rows() << " rows x " << series.buckets()
            << " buckets, tick " << tick << "s)\n";
  return 0;
}

int cmd_buckets(const CommonArgs& common, const std::string& trace_path,
                const std::string& catalog_path, long long at) {
  const ConfigMap cfg = resolve_config(common);
  const int tick = static_cast<int>(cfg.get_int("tick_seconds", 300));
  const auto catalog = load_catalog(catalog_path, tick);
  const Trace trace = load_trace_checked(trace_path, catalog);
  if (trace.jobs.empty()) throw Error("trace holds no jobs");

  std::int64_t when = at;
  if (when < 0) {
    when = trace.jobs.front().submit_time;
    for (const auto& j : trace.jobs) when = std::min(when, j.submit_time);
  }
  const auto snapshot = snapshot_at(trace.jobs, when);
  const BucketCounts counts = embed_requirements(snapshot, catalog);

  std::cout << "snapshot at " << when << ": " << snapshot.size() << " job instances\n";
  std::cout << "bucket  instance_type    raw        rounded\n";
  char buf[64];
  for (std::size_t b = 0; b < catalog.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%-7zu %-16s %-10.4f %lld", b,
                  catalog[b].instance_type.c_str(), counts.raw[b], counts.rounded[b]);
    std::cout << buf << "\n";
  }
  return 0;
}

int cmd_base_instance(const CommonArgs& common, const std::string& trace_path,
                      const std::string& catalog_path, const std::string& family,
                      long long stride) {
  const ConfigMap cfg = resolve_config(common);
  const int tick = static_cast<int>(cfg.get_int("tick_seconds", 300));
  auto catalog = load_catalog(catalog_path, tick);
  if (!family.empty()) {
    catalog = catalog.family(family);
    if (catalog.size() == 0) throw Error("no instance types match family '" + family + "'");
  }
  const Trace trace = load_trace_checked(trace_path, catalog);
  if (trace.jobs.empty()) throw Error("trace holds no jobs");

  std::int64_t lo = trace.jobs.front().submit_time, hi = trace.jobs.front().end_time;
  for (const auto& j : trace.jobs) {
    lo = std::min(lo, j.submit_time);
    hi = std::max(hi, j.end_time);
  }
  std::vector<std::vector<ResourceVector>> snapshots;
  for (std::int64_t t = (lo / tick) * tick; t < hi; t += tick * std::max(1LL, stride))
    snapshots.push_back(snapshot_at(trace.jobs, t));

  const BaseInstanceResult result = select_base_instance(snapshots, catalog);
  std::cout << "base instance: " << result.instance_type << "\n";
  std::ostringstream csv;
  csv << "step,smallest_type,scale,committed\n";
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const auto& s = result.steps[i];
    csv << i << "," << s.smallest_type << "," << detail::fmt_double(s.scale) << ","
        << (s.committed ? 1 : 0) << "\n";
    std::cout << "  scale with smallest=" << s.smallest_type << ": " << s.scale
              << (s.committed ? " (dropped)" : "") << "\n";
  }
  const fs::path p = out_path(common, cfg, "base_instance_scale.csv");
  write_text_file(p, csv.str());
  std::cout << "wrote " << p.string() << "\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& series_path) {
  const ConfigMap cfg = resolve_config(common);
  const auto series = load_series(series_path.empty() ? cfg.get_string("series", "") : series_path);
  const TransformerConfig tcfg = transformer_config(cfg);

  const double fraction = cfg.get_double("train_fraction", 0.9);
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("train_fraction must lie in (0, 1]");
  std::size_t split = static_cast<std::size_t>(static_cast<double>(series.rows()) * fraction);
  split = std::min(split, series.rows());
  if (split < static_cast<std::size_t>(tcfg.window_len) + 2)
    throw Error("training split too short: " + std::to_string(split) + " rows for window " +
                std::to_string(tcfg.window_len));

  TransformerModel model(tcfg);
  const auto t0 = std::chrono::steady_clock::now();
  model.fit(series.slice(0, split));
  const auto train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path ckpt = out_path(common, cfg, "model.ckpt");
  save_checkpoint(model, ckpt.string());

  std::ostringstream log;
  log << "step,lr,loss\n";
  for (const auto& e : model.train_log())
    log << e.step << "," << detail::fmt_double(e.lr) << "," << detail::fmt_double(e.loss) << "\n";
  const fs::path logp = out_path(common, cfg, "train_log.csv");
  write_text_file(logp, log.str());

  std::cout << "trained " << tcfg.train_steps << " steps in " << detail::fmt_double(train_seconds)
            << "s; final batch loss " << detail::fmt_double(model.train_log().back().loss) << "\n";

  // walk the held-out tail one step at a time
  if (split + 1 <= series.rows() - 1) {
    std::vector<std::vector<double>> y_norm, yhat_norm, y_raw, yhat_raw;
    for (std::size_t t = std::max(split, static_cast<std::size_t>(tcfg.window_len)); t < series.rows(); ++t) {
      const Matrix window = series.to_matrix(t - tcfg.window_len, t);
      const auto pred = model.predict_next(window);
      std::vector<double> actual(series.buckets());
      for (std::size_t c = 0; c < series.buckets(); ++c) actual[c] = static_cast<double>(series.at(t, c));
      y_raw.push_back(actual);
      yhat_raw.push_back(pred);
      y_norm.push_back(model.scaler().normalize_row(actual));
      yhat_norm.push_back(model.scaler().normalize_row(pred));
    }
    if (!y_raw.empty()) {
      std::cout << "test mse (normalized) = " << detail::fmt_double(mse(y_norm, yhat_norm)) << "\n";
      std::cout << "test pmse (normalized) = " << detail::fmt_double(pmse(y_norm, yhat_norm)) << "\n";
      std::cout << "test mse (raw) = " << detail::fmt_double(mse(y_raw, yhat_raw)) << "\n";
      std::cout << "test pmse (raw) = " << detail::fmt_double(pmse(y_raw, yhat_raw)) << "\n";
    }
  }
  std::cout << "wrote " << ckpt.string() << "\n";
  std::cout << "wrote " << logp.string() << "\n";
  return 0;
}

int cmd_predict(const CommonArgs& common, const std::string& series_path,
                const std::string& checkpoint_path, const std::string& groups_path) {
  const ConfigMap cfg = resolve_config(common);
  const auto series = load_series(series_path);
  TransformerModel model = load_checkpoint(checkpoint_path.empty() ? cfg.get_string("checkpoint", "")
                                                                   : checkpoint_path);
  const Matrix window = tail_window(series, model.config().window_len);
  const auto predicted = model.predict_next(window);

  const std::vector<long long> current = series.row(series.rows() - 1);
  const auto deltas = compute_delta(predicted, current);

  const PlacementGroupSet groups = groups_path.empty()
                                       ? PlacementGroupSet::single_unbounded()
                                       : load_placement_groups(groups_path);
  const long long vi_max = cfg.get_int("vi_max_size", 0);
  const ScalingPlan plan = make_plan(deltas, groups, {}, vi_max);

  std::ostringstream counts;
  counts << "bucket,current,predicted,delta\n";
  bool any_delta = false;
  for (std::size_t b = 0; b < deltas.size(); ++b) {
    counts << b << "," << current[b] << "," << detail::fmt_double(predicted[b]) << "," << deltas[b]
           << "\n";
    any_delta = any_delta || deltas[b] > 0;
  }
  std::ostringstream assigns;
  assigns << "bucket,size,placement_group\n";
  for (const auto& a : plan.assignments)
    assigns << a.vi.bucket_index << "," << a.vi.size << "," << a.group_id << "\n";

  const fs::path counts_path = out_path(common, cfg, "plan_counts.csv");
  const fs::path assign_path = out_path(common, cfg, "plan_assignments.csv");
  write_text_file(counts_path, counts.str());
  write_text_file(assign_path, assigns.str());

  std::cout << counts.str();
  if (!any_delta)
    std::cout << "on-demand fallback: prediction does not exceed current usage; "
                 "no placeholders requested\n";
  std::cout << "wrote " << counts_path.string() << "\n";
  std::cout << "wrote " << assign_path.string() << "\n";
  return 0;
}

int cmd_simulate(const CommonArgs& common, const std::string& series_path,
                 const std::string& catalog_path, const std::string& policy,
                 const std::string& checkpoint_path) {
  const ConfigMap cfg = resolve_config(common);
  const auto series = load_series(series_path);
  const auto catalog = load_catalog(catalog_path, series.tick_seconds());
  const std::size_t eval_start = eval_start_for(cfg, series);

  PolicySetup setup = setup_policy(policy, cfg, series, eval_start, checkpoint_path);
  SimReport report = run(series, catalog, setup.sim, setup.model.get());
  report.train_seconds = setup.fit_seconds;

  std::ostringstream summary, ticks;
  write_report_summary(report, summary);
  write_report_ticks(report, ticks);
  const fs::path sp = out_path(common, cfg, "sim_" + report.model_name + "_summary.txt");
  const fs::path tp = out_path(common, cfg, "sim_" + report.model_name + "_ticks.csv");
  write_text_file(sp, summary.str());
  write_text_file(tp, ticks.str());

  std::cout << summary.str();
  std::cout << "wrote " << sp.string() << "\n";
  std::cout << "wrote " << tp.string() << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& common, const std::string& series_path,
                const std::string& catalog_path, const std::string& models_csv,
                const std::string& checkpoint_path) {
  const ConfigMap cfg = resolve_config(common);
  const auto series = load_series(series_path);
  const auto catalog = load_catalog(catalog_path, series.tick_seconds());
  const std::size_t eval_start = eval_start_for(cfg, series);

  std::vector<SimReport> reports;
  for (const auto& raw : detail::split_csv(models_csv)) {
    const std::string name = detail::trim(raw);
    if (name.empty()) continue;
    PolicySetup setup = setup_policy(name, cfg, series, eval_start, checkpoint_path);
    SimReport report = run(series, catalog, setup.sim, setup.model.get());
    report.train_seconds = setup.fit_seconds;
    reports.push_back(std::move(report));
    std::cout << "simulated " << reports.back().model_name << "\n";
  }

  const ComparisonTable table = compare(reports);
  std::ostringstream csv, text;
  write_comparison_csv(table, csv);
  write_comparison_text(table, text);
  const fs::path cp = out_path(common, cfg, "comparison.csv");
  const fs::path tp = out_path(common, cfg, "comparison.txt");
  write_text_file(cp, csv.str());
  write_text_file(tp, text.str());
  std::cout << text.str();
  std::cout << "wrote " << cp.string() << "\n";
  std::cout << "wrote " << tp.string() << "\n";
  return 0;
}

int cmd_export_attention(const CommonArgs& common, const std::string& series_path,
                         const std::string& checkpoint_path) {
  const ConfigMap cfg = resolve_config(common);
  const auto series = load_series(series_path);
  const TransformerModel model = load_checkpoint(checkpoint_path);
  const Matrix window = tail_window(series, model.config().window_len);

  std::ostringstream out;
  export_attention(model, window, out);
  const fs::path p = out_path(common, cfg, "attention.csv");
  write_text_file(p, out.str());
  std::cout << "wrote " << p.string() << " (" << model.config().encoder_layers << " layers x "
            << model.config().heads << " heads)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prescale: trace-driven predictive autoscaling toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string trace_path, catalog_path, series_path, checkpoint_path, groups_path;
  std::string policy = "on_demand";
  std::string models = "static,on_demand,holt_winters,arma,transformer";
  std::string family, emit = "both";
  long long at = -1, start = -1, end = -1, stride = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "key = value config file");
    sub->add_option("--set", common.overrides, "override a config key (key=value, repeatable)");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "seed override");
  };

  auto* synth = app.add_subcommand("synth", "generate the bundled synthetic workload");
  add_common(synth);
  synth->add_option("--emit", emit, "series, trace or both")
      ->check(CLI::IsMember({"series", "trace", "both"}));

  auto* ingest = app.add_subcommand("ingest", "sample a job trace into a bucket-count series");
  add_common(ingest);
  ingest->add_option("--trace", trace_path, "job trace file")->required();
  ingest->add_option("--catalog", catalog_path, "bucket catalog file")->required();
  ingest->add_option("--start", start, "range start (epoch seconds, default trace start)");
  ingest->add_option("--end", end, "range end (epoch seconds, exclusive, default trace end)");

  auto* buckets = app.add_subcommand("buckets", "embed one snapshot into bucket counts");
  add_common(buckets);
  buckets->add_option("--trace", trace_path, "job trace file")->required();
  buckets->add_option("--catalog", catalog_path, "bucket catalog file")->required();
  buckets->add_option("--at", at, "snapshot instant (epoch seconds, default earliest submit)");

  auto* base = app.add_subcommand("base-instance", "pick the smallest useful instance type");
  add_common(base);
  base->add_option("--trace", trace_path, "job trace file")->required();
  base->add_option("--catalog", catalog_path, "bucket catalog file")->required();
  base->add_option("--family", family, "restrict to instance types with this prefix");
  base->add_option("--stride", stride, "sample every Nth tick (default 1)");

  auto* train = app.add_subcommand("train", "train the forecaster on a series");
  add_common(train);
  train->add_option("--series", series_path, "bucket-count series file")->required();

  auto* predict = app.add_subcommand("predict", "forecast the next tick and emit a scaling plan");
  add_common(predict);
  predict->add_option("--series", series_path, "bucket-count series file")->required();
  predict->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  predict->add_option("--groups", groups_path, "placement groups file");

  auto* simulate = app.add_subcommand("simulate", "replay a series under one scaling policy");
  add_common(simulate);
  simulate->add_option("--series", series_path, "bucket-count series file")->required();
  simulate->add_option("--catalog", catalog_path, "bucket catalog file")->required();
  simulate->add_option("--policy", policy,
                       "on_demand | oracle | ladder | static | holt_winters | arma | transformer");
  simulate->add_option("--checkpoint", checkpoint_path, "checkpoint for the transformer policy");

  auto* cmp = app.add_subcommand("compare", "run several policies and tabulate the results");
  add_common(cmp);
  cmp->add_option("--series", series_path, "bucket-count series file")->required();
  cmp->add_option("--catalog", catalog_path, "bucket catalog file")->required();
  cmp->add_option("--models", models, "comma-separated policy list");
  cmp->add_option("--checkpoint", checkpoint_path, "reuse a trained transformer checkpoint");

  auto* attn = app.add_subcommand("export-attention", "dump encoder attention weights as CSV");
  add_common(attn);
  attn->add_option("--series", series_path, "bucket-count series file")->required();
  attn->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(common, emit);
    if (ingest->parsed()) return cmd_ingest(common, trace_path, catalog_path, start, end);
    if (buckets->parsed()) return cmd_buckets(common, trace_path, catalog_path, at);
    if (base->parsed()) return cmd_base_instance(common, trace_path, catalog_path, family, stride);
    if (train->parsed()) return cmd_train(common, series_path);
    if (predict->parsed()) return cmd_predict(common, series_path, checkpoint_path, groups_path);
    if (simulate->parsed())
      return cmd_simulate(common, series_path, catalog_path, policy, checkpoint_path);
    if (cmp->parsed()) return cmd_compare(common, series_path, catalog_path, models, checkpoint_path);
    if (attn->parsed()) return cmd_export_attention(common, series_path, checkpoint_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
