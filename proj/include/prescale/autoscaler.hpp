#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/resources.hpp"

namespace prescale {

// Cluster inventory at one instant, all per bucket.
struct ClusterSnapshot {
  std::vector<long long> current_counts;       // embedded counts of running jobs
  std::vector<long long> provisioned;          // instances up or launching
  std::vector<long long> placeholder_targets;  // currently requested placeholders
};

// A gang of instances of one bucket that must land in the same placement
// group (distributed-training locality).
struct VirtualInstance {
  std::size_t bucket_index = 0;
  long long size = 1;
  std::string origin_job;  // optional provenance, used in diagnostics
};

struct PlacementGroup {
  std::string id;
  long long capacity = 0;
};

class PlacementGroupSet {
public:
  PlacementGroupSet() = default;
  explicit PlacementGroupSet(std::vector<PlacementGroup> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) throw Error("placement group set must not be empty");
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (groups_[i].capacity <= 0) throw Error("placement group " + groups_[i].id + " needs capacity > 0");
      for (std::size_t j = i + 1; j < groups_.size(); ++j)
        if (groups_[i].id == groups_[j].id) throw Error("duplicate placement group id: " + groups_[i].id);
    }
  }

  // Cloud capacity is treated as unbounded by default.
  static PlacementGroupSet single_unbounded() {
    return PlacementGroupSet({{"default", std::numeric_limits<long long>::max() / 4}});
  }

  const std::vector<PlacementGroup>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }

private:
  std::vector<PlacementGroup> groups_;
};

struct Assignment {
  VirtualInstance vi;
  std::string group_id;
};

// Per-bucket placeholder increments plus their placement.
struct ScalingPlan {
  std::vector<long long> placeholder_deltas;
  std::vector<Assignment> assignments;
};

// Scale-up delta: the amount by which the prediction exceeds the currently
// running counts, never negative (placeholders cannot reach negative
// replicas; a low prediction degrades to on-demand behavior).
inline std::vector<long long> compute_delta(const std::vector<double>& predicted,
                                            const std::vector<long long>& current_counts) {
  if (predicted.size() != current_counts.size())
    throw ShapeError("compute_delta: prediction and snapshot lengths differ");
  std::vector<long long> delta(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const long long want = static_cast<long long>(std::ceil(predicted[i]));
    delta[i] = std::max(0LL, want - current_counts[i]);
  }
  return delta;
}

inline std::vector<long long> compute_delta(const std::vector<double>& predicted,
                                            const ClusterSnapshot& snapshot) {
  return compute_delta(predicted, snapshot.current_counts);
}

struct LadderResult {
  std::vector<long long> targets;
  std::vector<bool> overflow;  // recent max exceeded the top rung; clamped
};

// Cold-start policy: rounds each bucket's recent maximum up to the smallest
// covering rung. A maximum above the top rung clamps there and is flagged.
inline LadderResult ladder_policy(const std::vector<long long>& recent_max,
                                  const std::vector<long long>& rungs) {
  if (rungs.empty()) throw Error("ladder policy needs at least one rung");
  for (std::size_t i = 0; i + 1 < rungs.size(); ++i)
    if (rungs[i] >= rungs[i + 1]) throw Error("ladder rungs must be strictly ascending");

  LadderResult out;
  out.targets.resize(recent_max.size());
  out.overflow.assign(recent_max.size(), false);
  for (std::size_t i = 0; i < recent_max.size(); ++i) {
    const auto it = std::lower_bound(rungs.begin(), rungs.end(), recent_max[i]);
    if (it == rungs.end()) {
      out.targets[i] = rungs.back();
      out.overflow[i] = true;
    } else {
      out.targets[i] = *it;
    }
  }
  return out;
}

// Distributes virtual instances whole across placement groups: biggest
// first, each to the least-loaded group with enough free capacity, ties
// broken by group order.
inline std::vector<Assignment> balance(const std::vector<VirtualInstance>& virtual_instances,
                                       const PlacementGroupSet& groups,
                                       std::vector<long long> existing_load = {}) {
  if (existing_load.empty()) existing_load.assign(groups.size(), 0);
  if (existing_load.size() != groups.size())
    throw ShapeError("balance: existing_load width does not match group count");

  for (const auto& vi : virtual_instances)
    if (vi.size < 1) throw Error("virtual instance size must be >= 1");

  std::vector<std::size_t> order(virtual_instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return virtual_instances[a].size > virtual_instances[b].size;
  });

  std::vector<long long> load = std::move(existing_load);
  std::vector<Assignment> assignments(virtual_instances.size());
  for (std::size_t oi : order) {
    const auto& vi = virtual_instances[oi];
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups.groups()[g].capacity - load[g] < vi.size) continue;
      if (!best || load[g] < load[*best]) best = g;
    }
    if (!best)
      throw CapacityError("virtual instance of size " + std::to_string(vi.size) +
                          (vi.origin_job.empty() ? "" : " (" + vi.origin_job + ")") +
                          " fits no placement group");
    load[*best] += vi.size;
    assignments[oi] = {vi, groups.groups()[*best].id};
  }
  return assignments;
}

// Wraps per-bucket deltas into virtual instances (one per bucket, optionally
// chunked) and balances them into placement groups.
inline ScalingPlan make_plan(const std::vector<long long>& deltas, const PlacementGroupSet& groups,
                             std::vector<long long> existing_load = {},
                             long long max_virtual_instance = 0) {
  std::vector<VirtualInstance> vis;
  for (std::size_t b = 0; b < deltas.size(); ++b) {
    if (deltas[b] < 0) throw Error("placeholder deltas must be non-negative");
    long long remaining = deltas[b];
    while (remaining > 0) {
      const long long size =
          max_virtual_instance > 0 ? std::min(remaining, max_virtual_instance) : remaining;
      vis.push_back({b, size, "bucket-" + std::to_string(b)});
      remaining -= size;
    }
  }
  ScalingPlan plan;
  plan.placeholder_deltas = deltas;
  plan.assignments = balance(vis, groups, std::move(existing_load));
  return plan;
}

// Placement groups file: header `group_id,capacity`, one group per row.
inline PlacementGroupSet parse_placement_groups(std::istream& in,
                                                const std::string& source = "<groups>") {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  ++lineno;
  if (detail::trim(line) != "group_id,capacity")
    throw ParseError(source, lineno, "header must be group_id,capacity");
  std::vector<PlacementGroup> groups;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto cells = detail::split_csv(t);
    if (cells.size() != 2) throw ParseError(source, lineno, "expected group_id,capacity");
    groups.push_back({cells[0], detail::parse_integer(cells[1], source, lineno)});
  }
  try {
    return PlacementGroupSet(std::move(groups));
  } catch (const Error& e) {
    throw ParseError(source, lineno, e.what());
  }
}

inline PlacementGroupSet load_placement_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open placement groups file: " + path);
  return parse_placement_groups(in, path);
}

}  // namespace prescale
