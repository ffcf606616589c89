#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/matrix.hpp"
#include "prescale/series.hpp"

namespace prescale {

// Per-column min/max scaling fitted on training data. Columns where
// max == min normalize to 0.
class ColumnScaler {
public:
  ColumnScaler() = default;
  ColumnScaler(std::vector<double> mins, std::vector<double> maxs)
      : mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (mins_.size() != maxs_.size()) throw ShapeError("scaler min/max length mismatch");
  }

  static ColumnScaler fit(const Matrix& m, int first_row, int last_row) {
    if (first_row >= last_row) throw ShapeError("scaler needs at least one row");
    std::vector<double> mins(m.cols()), maxs(m.cols());
    for (int c = 0; c < m.cols(); ++c) {
      double lo = m(first_row, c), hi = m(first_row, c);
      for (int r = first_row; r < last_row; ++r) {
        lo = std::min(lo, m(r, c));
        hi = std::max(hi, m(r, c));
      }
      mins[c] = lo;
      maxs[c] = hi;
    }
    return ColumnScaler(std::move(mins), std::move(maxs));
  }

  std::size_t columns() const { return mins_.size(); }
  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }

  double normalize_value(std::size_t col, double x) const {
    const double span = maxs_[col] - mins_[col];
    return span > 0.0 ? (x - mins_[col]) / span : 0.0;
  }

  double denormalize_value(std::size_t col, double y) const {
    const double span = maxs_[col] - mins_[col];
    return span > 0.0 ? y * span + mins_[col] : mins_[col];
  }

  Matrix normalize(const Matrix& m) const {
    if (static_cast<std::size_t>(m.cols()) != mins_.size())
      throw ShapeError("scaler column count mismatch");
    Matrix out(m.rows(), m.cols());
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) out(r, c) = normalize_value(c, m(r, c));
    return out;
  }

  std::vector<double> normalize_row(const std::vector<double>& row) const {
    if (row.size() != mins_.size()) throw ShapeError("scaler column count mismatch");
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = normalize_value(c, row[c]);
    return out;
  }

  std::vector<double> denormalize_row(const std::vector<double>& row) const {
    if (row.size() != mins_.size()) throw ShapeError("scaler column count mismatch");
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = denormalize_value(c, row[c]);
    return out;
  }

private:
  std::vector<double> mins_, maxs_;
};

// Sliding one-step-ahead samples over a normalized series. Sample i reads the
// window of rows [targets_[i] - window_len, targets_[i]) and predicts row
// targets_[i]. The normalized series matrix is shared between splits.
class WindowDataset {
public:
  WindowDataset() = default;
  WindowDataset(int window_len, std::shared_ptr<const Matrix> normalized,
                std::vector<int> target_rows, ColumnScaler scaler)
      : window_len_(window_len),
        normalized_(std::move(normalized)),
        targets_(std::move(target_rows)),
        scaler_(std::move(scaler)) {}

  int window_len() const { return window_len_; }
  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  int columns() const { return normalized_ ? normalized_->cols() : 0; }
  const ColumnScaler& scaler() const { return scaler_; }
  const std::vector<int>& target_rows() const { return targets_; }

  Matrix window(std::size_t i) const {
    const int t = targets_[i];
    Matrix w(window_len_, normalized_->cols());
    for (int r = 0; r < window_len_; ++r)
      for (int c = 0; c < normalized_->cols(); ++c) w(r, c) = (*normalized_)(t - window_len_ + r, c);
    return w;
  }

  std::vector<double> target(std::size_t i) const {
    const int t = targets_[i];
    std::vector<double> y(normalized_->cols());
    for (int c = 0; c < normalized_->cols(); ++c) y[c] = (*normalized_)(t, c);
    return y;
  }

private:
  int window_len_ = 0;
  std::shared_ptr<const Matrix> normalized_;
  std::vector<int> targets_;
  ColumnScaler scaler_;
};

// Chronological train/test split of sliding windows. Normalization is fitted
// on the training region only (all rows a training window or target can
// read). Test windows may reach back across the boundary, but every test
// target lies strictly after the last training target. train_fraction = 1
// leaves the test split empty.
inline std::pair<WindowDataset, WindowDataset> make_windows(const BucketCountSeries& series,
                                                            int window_len,
                                                            double train_fraction) {
  if (window_len <= 0) throw Error("window_len must be positive");
  if (train_fraction <= 0.0 || train_fraction > 1.0)
    throw Error("train_fraction must be in (0, 1]");
  const int rows = static_cast<int>(series.rows());
  if (rows < window_len + 2)
    throw Error("series too short: " + std::to_string(rows) + " rows, need at least " +
                std::to_string(window_len + 2));

  const int total_targets = rows - window_len;
  int train_targets = static_cast<int>(std::floor(train_fraction * total_targets));
  train_targets = std::max(1, std::min(train_targets, total_targets));

  const Matrix raw = series.to_matrix();
  ColumnScaler scaler = ColumnScaler::fit(raw, 0, window_len + train_targets);
  auto normalized = std::make_shared<const Matrix>(scaler.normalize(raw));

  std::vector<int> train_rows, test_rows;
  for (int t = window_len; t < window_len + train_targets; ++t) train_rows.push_back(t);
  for (int t = window_len + train_targets; t < rows; ++t) test_rows.push_back(t);

  return {WindowDataset(window_len, normalized, std::move(train_rows), scaler),
          WindowDataset(window_len, normalized, std::move(test_rows), scaler)};
}

}  // namespace prescale
