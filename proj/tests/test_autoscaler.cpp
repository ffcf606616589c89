#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <sstream>

#include "prescale/autoscaler.hpp"

using namespace prescale;

TEST_CASE("compute_delta never scales down") {
  CHECK(compute_delta({5, 2}, std::vector<long long>{3, 3}) == std::vector<long long>{2, 0});
  // prediction below current usage degrades to on-demand: all-zero plan
  CHECK(compute_delta({2, 1}, std::vector<long long>{3, 3}) == std::vector<long long>{0, 0});
  CHECK(compute_delta({3, 3}, std::vector<long long>{3, 3}) == std::vector<long long>{0, 0});
  // fractional predictions round up before subtraction
  CHECK(compute_delta({3.2, 0.1}, std::vector<long long>{3, 0}) == std::vector<long long>{1, 1});
  CHECK_THROWS_AS(compute_delta({1.0}, std::vector<long long>{1, 2}), ShapeError);
}

TEST_CASE("compute_delta is monotone in the prediction") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::uniform_int_distribution<long long> cur(0, 15);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> pred{u(rng), u(rng), u(rng)};
    std::vector<long long> current{cur(rng), cur(rng), cur(rng)};
    const auto base = compute_delta(pred, current);
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(current[i] + base[i] >= static_cast<long long>(std::ceil(pred[i])));
    std::vector<double> raised = pred;
    raised[iter % 3] += u(rng);
    const auto more = compute_delta(raised, current);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(more[i] >= base[i]);
  }
}

TEST_CASE("ladder policy rounds up to rungs") {
  const std::vector<long long> rungs{2, 5, 10};
  const std::vector<long long> recent{3, 0, 11, 5};
  auto r = ladder_policy(recent, rungs);
  CHECK(r.targets == std::vector<long long>{5, 2, 10, 5});
  CHECK(r.overflow == std::vector<bool>{false, false, true, false});

  // targets cover the observed max except in the flagged clamp case, and are
  // always drawn from the rung set
  for (std::size_t i = 0; i < r.targets.size(); ++i) {
    if (!r.overflow[i]) CHECK(r.targets[i] >= recent[i]);
    CHECK(std::find(rungs.begin(), rungs.end(), r.targets[i]) != rungs.end());
  }
  CHECK_THROWS_AS(ladder_policy({1}, {}), Error);
  CHECK_THROWS_AS(ladder_policy({1}, {2, 2}), Error);
}

TEST_CASE("balance spreads virtual instances whole") {
  SECTION("four plus two across two empty groups") {
    PlacementGroupSet groups({{"pg-a", 8}, {"pg-b", 8}});
    std::vector<VirtualInstance> vis{{0, 4, "dist-train"}, {0, 2, "small-gang"}};
    auto a = balance(vis, groups);
    REQUIRE(a.size() == 2);
    CHECK(a[0].group_id == "pg-a");
    CHECK(a[1].group_id == "pg-b");
  }
  SECTION("single virtual instance, single group") {
    PlacementGroupSet groups({{"only", 4}});
    auto a = balance({{1, 3, ""}}, groups);
    CHECK(a[0].group_id == "only");
  }
  SECTION("three singles across two groups land 2 and 1") {
    PlacementGroupSet groups({{"g1", 10}, {"g2", 10}});
    auto a = balance({{0, 1, ""}, {0, 1, ""}, {0, 1, ""}}, groups);
    long long g1 = 0, g2 = 0;
    for (const auto& x : a) (x.group_id == "g1" ? g1 : g2) += x.vi.size;
    CHECK(g1 == 2);
    CHECK(g2 == 1);
  }
  SECTION("capacity error names the virtual instance") {
    PlacementGroupSet groups({{"g1", 3}});
    CHECK_THROWS_WITH(balance({{0, 5, "too-big"}}, groups),
                      Catch::Matchers::ContainsSubstring("size 5") &&
                          Catch::Matchers::ContainsSubstring("too-big"));
  }
  SECTION("existing load steers placement") {
    PlacementGroupSet groups({{"g1", 100}, {"g2", 100}});
    auto a = balance({{0, 1, ""}}, groups, {50, 3});
    CHECK(a[0].group_id == "g2");
  }
}

TEST_CASE("balance invariants on random inputs") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> nvi(1, 12), size(1, 6), ngroups(1, 4);
  for (int iter = 0; iter < 200; ++iter) {
    const int g = ngroups(rng);
    std::vector<PlacementGroup> groups;
    for (int i = 0; i < g; ++i) groups.push_back({"g" + std::to_string(i), 1000});
    PlacementGroupSet set(groups);

    std::vector<VirtualInstance> vis;
    const int n = nvi(rng);
    long long largest = 0;
    for (int i = 0; i < n; ++i) {
      vis.push_back({0, size(rng), "vi" + std::to_string(i)});
      largest = std::max(largest, vis.back().size);
    }
    const auto a = balance(vis, set);
    const auto b = balance(vis, set);
    REQUIRE(a.size() == vis.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].group_id == b[i].group_id);  // deterministic

    std::map<std::string, long long> load;
    for (const auto& grp : groups) load[grp.id] = 0;
    for (const auto& x : a) load[x.group_id] += x.vi.size;
    long long lo = 1'000'000, hi = 0;
    for (const auto& [id, l] : load) {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    CHECK(hi - lo <= largest);
  }
}

TEST_CASE("make_plan wraps deltas and keeps per-bucket sums") {
  PlacementGroupSet groups({{"g1", 6}, {"g2", 6}});
  auto plan = make_plan({4, 0, 3}, groups, {}, 2);
  CHECK(plan.placeholder_deltas == std::vector<long long>{4, 0, 3});
  std::vector<long long> per_bucket(3, 0);
  for (const auto& a : plan.assignments) {
    per_bucket[a.vi.bucket_index] += a.vi.size;
    CHECK(a.vi.size <= 2);
  }
  CHECK(per_bucket == std::vector<long long>{4, 0, 3});
}

TEST_CASE("placement groups file") {
  std::istringstream in(
      "group_id,capacity\n"
      "rack-1,16\n"
      "rack-2,16\n");
  auto set = parse_placement_groups(in, "pg.csv");
  CHECK(set.size() == 2);
  CHECK(set.groups()[0].id == "rack-1");

  std::istringstream dup(
      "group_id,capacity\n"
      "r,4\n"
      "r,4\n");
  CHECK_THROWS_AS(parse_placement_groups(dup), ParseError);

  std::istringstream bad("nope\n");
  CHECK_THROWS_AS(parse_placement_groups(bad), ParseError);
}
