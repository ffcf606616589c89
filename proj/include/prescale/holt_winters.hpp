#pragma once

#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/predictor.hpp"

namespace prescale {

struct HoltWintersParams {
  double alpha = 0.5;
  double beta = 0.001;
  double gamma = 0.3;
  int season = 2016;  // ticks per season (m)

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) ||
        !(gamma > 0.0 && gamma < 1.0))
      throw Error("holt-winters smoothing factors must lie in (0, 1)");
    if (season < 1) throw Error("holt-winters season must be >= 1");
  }
};

// Additive triple exponential smoothing over one column.
//
// Initialization uses the first two seasons: level is the first-season mean,
// trend the per-step difference of the two season means, and the seasonal
// components are the first season's deviations from its mean. The state then
// updates through the remaining points; out[k] is the one-step forecast of
// x[m + k] made from the state at m + k - 1, and the final entry forecasts
// the value one past the end of the column.
inline std::vector<double> holt_winters_one_step(const std::vector<double>& x,
                                                 const HoltWintersParams& p) {
  p.validate();
  const int m = p.season;
  const int n = static_cast<int>(x.size());
  if (n < 2 * m)
    throw Error("holt-winters needs at least two seasons (" + std::to_string(2 * m) +
                " points), got " + std::to_string(n));

  double mean1 = 0.0, mean2 = 0.0;
  for (int i = 0; i < m; ++i) mean1 += x[i];
  for (int i = m; i < 2 * m; ++i) mean2 += x[i];
  mean1 /= m;
  mean2 /= m;

  double level = mean1;
  double trend = (mean2 - mean1) / m;
  std::vector<double> seasonal(m);
  for (int i = 0; i < m; ++i) seasonal[i] = x[i] - mean1;

  std::vector<double> forecasts;
  forecasts.reserve(n - m + 1);
  for (int t = m; t <= n; ++t) {
    forecasts.push_back(level + trend + seasonal[t % m]);
    if (t == n) break;
    const double prev_level = level;
    const double s_old = seasonal[t % m];
    level = p.alpha * (x[t] - s_old) + (1.0 - p.alpha) * (level + trend);
    trend = p.beta * (level - prev_level) + (1.0 - p.beta) * trend;
    seasonal[t % m] = p.gamma * (x[t] - level) + (1.0 - p.gamma) * s_old;
  }
  return forecasts;
}

// Column-wise Holt-Winters behind the ForecastModel contract. The predictor
// is stateless between calls: each forecast replays the smoothing recurrences
// over the supplied window, so the window must span at least two seasons.
class HoltWintersModel : public ForecastModel {
public:
  explicit HoltWintersModel(HoltWintersParams params) : params_(params) { params_.validate(); }

  void fit(const BucketCountSeries& train) override {
    if (static_cast<int>(train.rows()) < 2 * params_.season)
      throw Error("holt-winters training series shorter than two seasons");
    columns_ = train.buckets();
  }

  std::vector<double> predict_next(const Matrix& window) const override {
    if (window.rows() < 2 * params_.season)
      throw Error("holt-winters window shorter than two seasons");
    std::vector<double> out(window.cols());
    std::vector<double> col(window.rows());
    for (int c = 0; c < window.cols(); ++c) {
      for (int r = 0; r < window.rows(); ++r) col[r] = window(r, c);
      out[c] = holt_winters_one_step(col, params_).back();
    }
    clamp_nonneg(out);
    return out;
  }

  std::string name() const override { return "holt_winters"; }

private:
  HoltWintersParams params_;
  std::size_t columns_ = 0;
};

}  // namespace prescale
