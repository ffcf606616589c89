#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "prescale/arma.hpp"
#include "prescale/holt_winters.hpp"
#include "prescale/predictor.hpp"

using namespace prescale;

TEST_CASE("holt-winters on a constant column") {
  HoltWintersParams p{0.5, 0.001, 0.3, 4};
  std::vector<double> x(20, 6.5);
  const auto f = holt_winters_one_step(x, p);
  REQUIRE(f.size() == x.size() - 4 + 1);
  for (double v : f) CHECK_THAT(v, Catch::Matchers::WithinAbs(6.5, 1e-12));
}

TEST_CASE("holt-winters locks onto a noiseless periodic column") {
  const int m = 12;
  HoltWintersParams p{0.5, 0.001, 0.3, m};
  std::vector<double> x;
  for (int t = 0; t < 8 * m; ++t) x.push_back(10.0 + 4.0 * std::sin(2.0 * M_PI * t / m));
  const auto f = holt_winters_one_step(x, p);
  // f[k] forecasts x[m + k]; after one full season of updates (t >= 2m) the
  // forecasts match the periodic truth.
  for (std::size_t k = m; k + m < x.size(); ++k)
    CHECK_THAT(f[k], Catch::Matchers::WithinAbs(x[m + k], 1e-6));
}

TEST_CASE("holt-winters follows a linear ramp with season 1") {
  HoltWintersParams p{0.5, 0.001, 0.3, 1};
  std::vector<double> x;
  for (int t = 0; t < 30; ++t) x.push_back(2.0 + 0.75 * t);
  const auto f = holt_winters_one_step(x, p);
  // m=1 initialization recovers the slope exactly, so every one-step error
  // is already zero.
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    CHECK_THAT(f[k], Catch::Matchers::WithinAbs(x[1 + k], 1e-9));
  CHECK_THAT(f.back(), Catch::Matchers::WithinAbs(2.0 + 0.75 * 30, 1e-9));
}

TEST_CASE("holt-winters preconditions") {
  HoltWintersParams p{0.5, 0.001, 0.3, 5};
  CHECK_THROWS_AS(holt_winters_one_step(std::vector<double>(9, 1.0), p), Error);
  CHECK_THROWS_AS(holt_winters_one_step(std::vector<double>(20, 1.0),
                                        HoltWintersParams{0.0, 0.5, 0.5, 5}),
                  Error);
}

TEST_CASE("holt-winters model clamps forecasts at zero") {
  HoltWintersModel model(HoltWintersParams{0.5, 0.001, 0.3, 1});
  Matrix window(6, 1);
  for (int r = 0; r < 6; ++r) window(r, 0) = 5.0 - r;  // heading below zero
  const auto pred = model.predict_next(window);
  CHECK(pred[0] == 0.0);

  Matrix tiny(1, 1);
  CHECK_THROWS_AS(model.predict_next(tiny), Error);
}

TEST_CASE("arma recovers an exact AR(1) differenced structure") {
  // x is built so its differences follow z_t = 0.5 * z_{t-1} exactly.
  std::vector<double> x{0.0};
  double z = 1.0;
  for (int t = 0; t < 40; ++t) {
    x.push_back(x.back() + z);
    z *= 0.5;
  }
  ArmaParams params{1, 0};
  const auto fit = hannan_rissanen(detail::difference(x), params);
  CHECK_FALSE(fit.ridge_used);
  CHECK_THAT(fit.phi[0], Catch::Matchers::WithinAbs(0.5, 1e-3));
  CHECK_THAT(fit.constant, Catch::Matchers::WithinAbs(0.0, 1e-6));

  const auto preds = arma_one_step(x, params);
  REQUIRE(preds.size() == x.size());
  // out[k] forecasts x[k+1]; after the filter warms up the fit is exact.
  for (std::size_t k = 5; k + 1 < x.size(); ++k)
    CHECK_THAT(preds[k], Catch::Matchers::WithinAbs(x[k + 1], 1e-6));
}

TEST_CASE("arma on a drifting white-noise column forecasts last + drift") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.1);
  const double drift = 5.0;
  std::vector<double> x{100.0};
  for (int t = 0; t < 2000; ++t) x.push_back(x.back() + drift + noise(rng));

  ArmaParams params{7, 7};
  const auto preds = arma_one_step(x, params);
  CHECK_THAT(preds.back(), Catch::Matchers::WithinAbs(x.back() + drift, 0.4));
}

TEST_CASE("arma constant series falls back to ridge and predicts the constant") {
  BucketCountSeries train(300, 0, 1, "cat");
  for (int i = 0; i < 160; ++i) train.append_row({9});

  ArmaModel model(ArmaParams{7, 7});
  model.fit(train);
  CHECK(model.ridge_used());

  Matrix window(20, 1);
  for (int r = 0; r < 20; ++r) window(r, 0) = 9.0;
  const auto pred = model.predict_next(window);
  CHECK_THAT(pred[0], Catch::Matchers::WithinAbs(9.0, 1e-6));
}

TEST_CASE("arma preconditions") {
  ArmaParams params{7, 7};
  CHECK_THROWS_AS(arma_one_step(std::vector<double>(100, 1.0), params), Error);  // < 10*(p+q)
  CHECK_THROWS_AS(ArmaParams({0, 0}).validate(), Error);
}

TEST_CASE("static-max predictor") {
  BucketCountSeries train(300, 0, 1, "cat");
  train.append_row({7});
  train.append_row({3});
  StaticMaxModel model;
  model.fit(train);
  Matrix window(3, 1);
  for (int i = 0; i < 5; ++i) CHECK(model.predict_next(window) == std::vector<double>{7.0});

  StaticMaxModel unfitted;
  CHECK_THROWS_AS(unfitted.predict_next(window), Error);
}
