#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/matrix.hpp"
#include "prescale/series.hpp"

namespace prescale {

// Common one-step-ahead forecasting contract. `window` carries the most
// recent window_len rows of raw (unnormalized) bucket counts; the returned
// vector is the forecast for the row right after the window, clamped >= 0.
class ForecastModel {
public:
  virtual ~ForecastModel() = default;
  virtual void fit(const BucketCountSeries& train) = 0;
  virtual std::vector<double> predict_next(const Matrix& window) const = 0;
  virtual std::string name() const = 0;
};

inline void clamp_nonneg(std::vector<double>& v) {
  for (double& x : v) x = std::max(0.0, x);
}

// Maximum static allocation: predicts the per-column training maximum at
// every step.
class StaticMaxModel : public ForecastModel {
public:
  void fit(const BucketCountSeries& train) override {
    if (train.rows() == 0) throw Error("static-max model needs a non-empty training series");
    max_.assign(train.buckets(), 0.0);
    for (std::size_t r = 0; r < train.rows(); ++r)
      for (std::size_t c = 0; c < train.buckets(); ++c)
        max_[c] = std::max(max_[c], static_cast<double>(train.at(r, c)));
  }

  std::vector<double> predict_next(const Matrix& window) const override {
    if (max_.empty()) throw Error("static-max model is not fitted");
    if (window.cols() != static_cast<int>(max_.size()))
      throw ShapeError("window column count does not match fitted series");
    return max_;
  }

  std::string name() const override { return "static"; }

  const std::vector<double>& train_max() const { return max_; }

private:
  std::vector<double> max_;
};

}  // namespace prescale
