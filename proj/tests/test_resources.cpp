#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "packing_oracle.hpp"
#include "prescale/resources.hpp"

using namespace prescale;

namespace {

BucketCatalog make_catalog(std::vector<std::pair<std::vector<double>, std::string>> specs,
                           std::vector<double> prices = {}) {
  ResourceSpace space = ResourceSpace::from_names(
      std::vector<std::string>(specs.front().first.size() == 2
                                   ? std::vector<std::string>{"gpu", "cpu"}
                                   : std::vector<std::string>{"gpu", "cpu", "mem_gb"}));
  std::vector<ResourceBucket> buckets;
  for (std::size_t i = 0; i < specs.size(); ++i)
    buckets.emplace_back(ResourceVector(specs[i].first), specs[i].second,
                         prices.empty() ? 1.0 : prices[i]);
  return BucketCatalog(space, std::move(buckets));
}

}  // namespace

TEST_CASE("element scan comparison follows the literal scan") {
  CHECK(any_less({1, 3.5, 1}, {0, 8, 2}));
  CHECK_FALSE(any_less({0, 8, 2}, {0, 8, 2}));
  // No early exit on a greater element: index 1 still wins the comparison.
  CHECK(any_less({5, 0}, {1, 1}));
  CHECK_THROWS_AS(any_less({1, 2}, {1, 2, 3}), SpaceMismatchError);
}

TEST_CASE("fits is inclusive and component-wise") {
  ResourceBucket m5(ResourceVector{0, 8, 2}, "m5.xlarge", 0.1);
  CHECK_FALSE(fits({1, 3.5, 1}, m5));
  CHECK(fits({0, 8, 2}, m5));
  CHECK(fits({0, 0, 0}, m5));
  CHECK_THROWS_AS(fits({1, 2}, m5), SpaceMismatchError);
}

TEST_CASE("lex_compare on examples") {
  CHECK(lex_compare({0, 1, 1}, {0, 1, 2}) == Ordering::Less);
  CHECK(lex_compare({1, 2, 4}, {0, 1, 2}) == Ordering::Greater);
  CHECK(lex_compare({0, 1, 2}, {0, 1, 2}) == Ordering::Equal);
}

TEST_CASE("lex_compare is a total order and fits is reflexive/transitive") {
  std::mt19937_64 rng(20240811);
  std::uniform_int_distribution<int> qty(0, 4);
  auto rand_vec = [&](int dims) {
    std::vector<double> q(dims);
    for (auto& v : q) v = qty(rng) * 0.5;
    return ResourceVector(q);
  };
  for (int iter = 0; iter < 500; ++iter) {
    auto a = rand_vec(3), b = rand_vec(3), c = rand_vec(3);
    // antisymmetry
    auto ab = lex_compare(a, b), ba = lex_compare(b, a);
    if (ab == Ordering::Less) CHECK(ba == Ordering::Greater);
    if (ab == Ordering::Equal) {
      CHECK(ba == Ordering::Equal);
      CHECK(a == b);
    }
    // transitivity
    if (lex_compare(a, b) != Ordering::Greater && lex_compare(b, c) != Ordering::Greater)
      CHECK(lex_compare(a, c) != Ordering::Greater);

    auto positive = [&](ResourceVector v) {
      std::vector<double> q = v.quantities();
      q[0] += 0.5;
      return ResourceVector(q);
    };
    ResourceBucket b1(positive(a), "b1", 0.0);
    ResourceBucket b2(positive(b), "b2", 0.0);
    CHECK(fits(b1.boundary, b1));
    if (fits(c, b1) && fits(b1.boundary, b2)) CHECK(fits(c, b2));
  }
}

TEST_CASE("embed_requirements hand-traced counts") {
  auto catalog = make_catalog({{{0, 1, 2}, "small"}, {{1, 2, 4}, "large"}});

  SECTION("three jobs across two buckets") {
    // First bucket takes (0,1,1) and (0,1,2); its CPU column sums to 2
    // against capacity 1, so the dominant ratio is 2.0.
    auto counts = embed_requirements({{0, 1, 1}, {0, 1, 2}, {1, 2, 4}}, catalog);
    CHECK(counts.raw == std::vector<double>{2.0, 1.0});
    CHECK(counts.rounded == std::vector<long long>{2, 1});
  }
  SECTION("single job exactly fills the large bucket") {
    auto counts = embed_requirements({{1, 2, 4}}, catalog);
    CHECK(counts.raw == std::vector<double>{0.0, 1.0});
    CHECK(counts.rounded == std::vector<long long>{0, 1});
  }
  SECTION("two small jobs") {
    auto counts = embed_requirements({{0, 1, 1}, {0, 1, 2}}, catalog);
    CHECK(counts.raw == std::vector<double>{2.0, 0.0});
    CHECK(counts.rounded == std::vector<long long>{2, 0});
  }
  SECTION("no jobs") {
    auto counts = embed_requirements({}, catalog);
    CHECK(counts.rounded == std::vector<long long>{0, 0});
  }
  SECTION("unpackable job names the offender") {
    CHECK_THROWS_WITH(embed_requirements({{2, 9, 9}}, catalog),
                      Catch::Matchers::ContainsSubstring("#0") &&
                          Catch::Matchers::ContainsSubstring("(2,9,9)"));
  }
}

TEST_CASE("embed_requirements random properties") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> njobs(0, 6), nbuckets(1, 3), ndims(1, 3), qty(0, 8);

  for (int iter = 0; iter < 300; ++iter) {
    const int dims = ndims(rng);
    std::vector<std::string> names;
    for (int d = 0; d < dims; ++d) names.push_back("r" + std::to_string(d));
    ResourceSpace space = ResourceSpace::from_names(names);

    // Quantities stay on a dyadic grid so both implementations sum exactly.
    auto rand_q = [&](bool positive_somewhere) {
      std::vector<double> q(dims);
      bool any = false;
      for (auto& v : q) {
        v = qty(rng) * 0.5;
        any = any || v > 0;
      }
      if (positive_somewhere && !any) q[0] = 0.5;
      return q;
    };

    std::vector<std::vector<double>> bounds_raw;
    std::vector<ResourceBucket> buckets;
    const int nb = nbuckets(rng);
    for (int b = 0; b < nb; ++b) {
      auto q = rand_q(true);
      bool dup = false;
      for (const auto& other : bounds_raw) dup = dup || other == q;
      if (dup) continue;
      bounds_raw.push_back(q);
      buckets.emplace_back(ResourceVector(q), "b" + std::to_string(b), 1.0);
    }
    BucketCatalog catalog(space, buckets);
    bounds_raw.clear();
    for (const auto& b : catalog.buckets()) bounds_raw.push_back(b.boundary.quantities());

    std::vector<std::vector<double>> jobs_raw;
    std::vector<ResourceVector> jobs;
    const int nj = njobs(rng);
    for (int j = 0; j < nj; ++j) {
      auto q = rand_q(false);
      jobs_raw.push_back(q);
      jobs.emplace_back(q);
    }

    const auto expected = oracle::pack(jobs_raw, bounds_raw);
    if (expected.unpackable) {
      CHECK_THROWS_AS(embed_requirements(jobs, catalog), UnpackableJobError);
      continue;
    }
    const auto counts = embed_requirements(jobs, catalog);
    CHECK(counts.raw == expected.raw);
    CHECK(counts.rounded == expected.rounded);

    // First-fit: no assigned job fits a smaller-indexed bucket.
    const auto assignment = assign_buckets(jobs, catalog);
    for (std::size_t j = 0; j < jobs.size(); ++j)
      for (std::size_t b = 0; b < assignment[j]; ++b) CHECK_FALSE(fits(jobs[j], catalog[b]));

    // Capacity sufficiency: per-bucket demand sums are covered by the
    // rounded instance count.
    std::vector<std::vector<double>> sums(catalog.size(), std::vector<double>(dims, 0.0));
    for (std::size_t j = 0; j < jobs.size(); ++j)
      for (int d = 0; d < dims; ++d) sums[assignment[j]][d] += jobs[j][d];
    for (std::size_t b = 0; b < catalog.size(); ++b)
      for (int d = 0; d < dims; ++d)
        CHECK(sums[b][d] <= static_cast<double>(counts.rounded[b]) * catalog[b].boundary[d] + 1e-12);

    // Monotonicity: one extra job never lowers a rounded count.
    std::vector<ResourceVector> more = jobs;
    more.emplace_back(rand_q(false));
    try {
      const auto bigger = embed_requirements(more, catalog);
      for (std::size_t b = 0; b < catalog.size(); ++b)
        CHECK(bigger.rounded[b] >= counts.rounded[b]);
    } catch (const UnpackableJobError&) {
    }
  }
}

TEST_CASE("select_base_instance") {
  SECTION("jobs filling the largest bucket survive every drop") {
    auto family = make_catalog({{{0, 1, 4}, "f.small"}, {{0, 2, 8}, "f.medium"}, {{0, 4, 16}, "f.large"}},
                               {1.0, 2.0, 4.0});
    std::vector<std::vector<ResourceVector>> snaps{{{0, 4, 16}, {0, 4, 16}}, {{0, 4, 16}}};
    auto result = select_base_instance(snaps, family);
    CHECK(result.instance_type == "f.large");
    CHECK(result.steps.size() == 3);
    CHECK(result.steps[0].committed);
    CHECK(result.steps[1].committed);
    CHECK_FALSE(result.steps[2].committed);
  }

  SECTION("stops when dropping the smallest raises the scale") {
    auto family = make_catalog({{{0, 1, 4}, "f.small"}, {{0, 2, 8}, "f.medium"}, {{0, 4, 16}, "f.large"}},
                               {1.0, 2.0, 4.0});
    // Three 0.4-CPU jobs: small buckets need ceil(1.2)=2 (scale 2),
    // medium needs ceil(0.6)=1 (scale 2, not worse), large costs 4.
    std::vector<std::vector<ResourceVector>> snaps{
        {{0, 0.4, 1}, {0, 0.4, 1}, {0, 0.4, 1}}};
    auto result = select_base_instance(snaps, family);
    CHECK(result.instance_type == "f.medium");
  }

  SECTION("a single bucket always survives") {
    auto family = make_catalog({{{0, 1, 4}, "only"}});
    auto result = select_base_instance({{{0, 0.5, 1}}}, family);
    CHECK(result.instance_type == "only");
  }

  SECTION("never returns a committed drop") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> qty(1, 6);
    for (int iter = 0; iter < 50; ++iter) {
      std::vector<std::pair<std::vector<double>, std::string>> specs;
      std::vector<double> prices;
      double c = qty(rng) * 0.5;
      for (int b = 0; b < 3; ++b) {
        specs.push_back({{0.0, c, c * 4}, "t" + std::to_string(b)});
        prices.push_back(c);
        c += qty(rng) * 0.5;
      }
      auto family = make_catalog(specs, prices);
      std::vector<std::vector<ResourceVector>> snaps(2);
      for (auto& s : snaps)
        for (int j = 0; j < 3; ++j) s.push_back(ResourceVector{0.0, qty(rng) * 0.25, qty(rng) * 0.5});
      bool packable = true;
      for (auto& s : snaps) {
        for (auto& j : s)
          if (!fits(j, family[family.size() - 1])) packable = false;
      }
      if (!packable) continue;
      auto result = select_base_instance(snaps, family);
      std::vector<std::string> committed;
      for (const auto& step : result.steps)
        if (step.committed) committed.push_back(step.smallest_type);
      for (const auto& name : committed) CHECK(name != result.instance_type);
    }
  }
}

TEST_CASE("catalog file parsing") {
  SECTION("round numbers and price conversion") {
    std::istringstream in(
        "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
        "m5.xlarge,0,4,16,0.192\n"
        "g4.xlarge,1,4,16,0.526\n");
    auto catalog = parse_catalog(in, 300, "cat.csv");
    REQUIRE(catalog.size() == 2);
    CHECK(catalog[0].instance_type == "m5.xlarge");  // sorted: GPU column first
    CHECK(catalog[1].instance_type == "g4.xlarge");
    CHECK(catalog.space().dim(0).name == "gpu");
    CHECK_THAT(catalog[0].price_per_tick, Catch::Matchers::WithinRel(0.192 * 300 / 3600, 1e-12));
  }
  SECTION("bad header") {
    std::istringstream in("type,gpu,price_per_hour\nx,1,2\n");
    CHECK_THROWS_AS(parse_catalog(in, 300), ParseError);
  }
  SECTION("duplicate boundaries rejected") {
    std::istringstream in(
        "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
        "a,0,4,16,0.1\n"
        "b,0,4,16,0.2\n");
    CHECK_THROWS_WITH(parse_catalog(in, 300), Catch::Matchers::ContainsSubstring("same boundary"));
  }
  SECTION("malformed number carries the line") {
    std::istringstream in(
        "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
        "a,0,four,16,0.1\n");
    CHECK_THROWS_WITH(parse_catalog(in, 300, "cat.csv"),
                      Catch::Matchers::ContainsSubstring("cat.csv:2"));
  }
  SECTION("all-zero boundary rejected") {
    std::istringstream in(
        "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
        "a,0,0,0,0.1\n");
    CHECK_THROWS_WITH(parse_catalog(in, 300), Catch::Matchers::ContainsSubstring("all-zero"));
  }
  SECTION("family filter") {
    std::istringstream in(
        "instance_type,gpu,cpu,mem_gb,price_per_hour\n"
        "m5.xlarge,0,4,16,0.192\n"
        "m5.2xlarge,0,8,32,0.384\n"
        "g4.xlarge,1,4,16,0.526\n");
    auto catalog = parse_catalog(in, 300);
    CHECK(catalog.family("m5").size() == 2);
    CHECK(catalog.family("g4").size() == 1);
  }
}
