#pragma once

#include <vector>

#include "prescale/errors.hpp"

namespace prescale {

namespace detail {

template <typename Fn>
double mean_squared(const std::vector<std::vector<double>>& y,
                    const std::vector<std::vector<double>>& yhat, Fn include) {
  if (y.size() != yhat.size()) throw ShapeError("metric length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i].size() != yhat[i].size()) throw ShapeError("metric vector width mismatch");
    for (std::size_t j = 0; j < y[i].size(); ++j) {
      const double e = y[i][j] - yhat[i][j];
      if (include(y[i][j], yhat[i][j])) sum += e * e;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace detail

// Mean squared error over every scalar component.
inline double mse(const std::vector<std::vector<double>>& y,
                  const std::vector<std::vector<double>>& yhat) {
  return detail::mean_squared(y, yhat, [](double, double) { return true; });
}

// Positive mean squared error: squared error summed only where the prediction
// exceeds the target (the overprovisioned part), still divided by the full
// component count, so pmse <= mse always holds.
inline double pmse(const std::vector<std::vector<double>>& y,
                   const std::vector<std::vector<double>>& yhat) {
  return detail::mean_squared(y, yhat, [](double yi, double yh) { return yh > yi; });
}

inline std::vector<std::vector<double>> as_rows(const std::vector<double>& flat) {
  std::vector<std::vector<double>> rows;
  rows.reserve(flat.size());
  for (double v : flat) rows.push_back({v});
  return rows;
}

inline double mse(const std::vector<double>& y, const std::vector<double>& yhat) {
  return mse(as_rows(y), as_rows(yhat));
}

inline double pmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  return pmse(as_rows(y), as_rows(yhat));
}

}  // namespace prescale
