#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/matrix.hpp"
#include "prescale/predictor.hpp"

namespace prescale {

struct ArmaParams {
  int p = 7;
  int q = 7;

  void validate() const {
    if (p < 0 || q < 0 || p + q == 0) throw Error("arma orders must be non-negative, p+q > 0");
  }
};

// Fitted ARMA(p,q) + constant on a once-differenced column.
struct ArmaFit {
  double constant = 0.0;
  std::vector<double> phi;    // AR coefficients, lag 1..p
  std::vector<double> theta;  // MA coefficients, lag 1..q
  bool ridge_used = false;    // normal equations were singular; ridge fallback applied
};

namespace detail {

// Ordinary least squares via normal equations; on a singular system retries
// with ridge factor 1e-8 and reports it.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& rows,
                                         const std::vector<double>& y, bool& ridge_used) {
  const int k = static_cast<int>(rows.empty() ? 0 : rows[0].size());
  const int n = static_cast<int>(rows.size());
  if (n == 0 || k == 0) throw Error("least squares needs a non-empty design");
  Matrix gram(k, k);
  std::vector<double> rhs(k, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < k; ++i) {
      rhs[i] += rows[t][i] * y[t];
      for (int j = i; j < k; ++j) gram(i, j) += rows[t][i] * rows[t][j];
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);

  std::vector<double> beta;
  if (solve_linear(gram, rhs, beta)) return beta;

  ridge_used = true;
  for (int i = 0; i < k; ++i) gram(i, i) += 1e-8;
  if (!solve_linear(gram, rhs, beta))
    throw Error("least squares failed even with ridge regularization");
  return beta;
}

inline std::vector<double> difference(const std::vector<double>& x) {
  std::vector<double> z;
  z.reserve(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t t = 1; t < x.size(); ++t) z.push_back(x[t] - x[t - 1]);
  return z;
}

}  // namespace detail

// Hannan-Rissanen two-stage estimation of ARMA(p,q) + constant:
// stage one fits a long autoregression (order 4*max(p,q)) to recover
// innovation estimates, stage two regresses on p series lags and q residual
// lags. Residuals before the long-AR horizon are taken as zero.
inline ArmaFit hannan_rissanen(const std::vector<double>& z, const ArmaParams& params) {
  params.validate();
  const int p = params.p, q = params.q;
  const int h = 4 * std::max(p, q);
  const int n = static_cast<int>(z.size());
  if (n < h + q + std::max(p, 1) + 1)
    throw Error("arma estimation needs at least " + std::to_string(h + q + std::max(p, 1) + 1) +
                " differenced points, got " + std::to_string(n));

  ArmaFit fit;

  // Stage 1: long AR for residuals.
  std::vector<double> resid(n, 0.0);
  if (q > 0) {
    std::vector<std::vector<double>> design;
    std::vector<double> target;
    for (int t = h; t < n; ++t) {
      std::vector<double> row(1 + h);
      row[0] = 1.0;
      for (int i = 1; i <= h; ++i) row[i] = z[t - i];
      design.push_back(std::move(row));
      target.push_back(z[t]);
    }
    const auto beta = detail::least_squares(design, target, fit.ridge_used);
    for (int t = h; t < n; ++t) {
      double pred = beta[0];
      for (int i = 1; i <= h; ++i) pred += beta[i] * z[t - i];
      resid[t] = z[t] - pred;
    }
  }

  // Stage 2: series lags plus residual lags.
  const int start = h + q;
  std::vector<std::vector<double>> design;
  std::vector<double> target;
  for (int t = start; t < n; ++t) {
    std::vector<double> row(1 + p + q);
    row[0] = 1.0;
    for (int i = 1; i <= p; ++i) row[i] = z[t - i];
    for (int j = 1; j <= q; ++j) row[p + j] = resid[t - j];
    design.push_back(std::move(row));
    target.push_back(z[t]);
  }
  const auto beta = detail::least_squares(design, target, fit.ridge_used);
  fit.constant = beta[0];
  fit.phi.assign(beta.begin() + 1, beta.begin() + 1 + p);
  fit.theta.assign(beta.begin() + 1 + p, beta.end());
  return fit;
}

// Runs the fitted recursion over a differenced column (missing lags taken as
// zero) and returns the one-step-ahead forecast of the next differenced
// value.
inline double arma_forecast_step(const ArmaFit& fit, const std::vector<double>& z) {
  const int p = static_cast<int>(fit.phi.size());
  const int q = static_cast<int>(fit.theta.size());
  const int n = static_cast<int>(z.size());
  std::vector<double> resid(n, 0.0);
  auto predict_at = [&](int t) {
    double pred = fit.constant;
    for (int i = 1; i <= p; ++i)
      if (t - i >= 0) pred += fit.phi[i - 1] * z[t - i];
    for (int j = 1; j <= q; ++j)
      if (t - j >= 0) pred += fit.theta[j - 1] * resid[t - j];
    return pred;
  };
  for (int t = 0; t < n; ++t) resid[t] = z[t] - predict_at(t);
  return predict_at(n);
}

// One-step predictions over a raw column: the model is estimated once on the
// whole column (difference once, Hannan-Rissanen), then replayed; out[k]
// forecasts x[k + 1], and the final entry forecasts one step past the end.
// Forecasts are clamped at zero after re-integration.
inline std::vector<double> arma_one_step(const std::vector<double>& x, const ArmaParams& params) {
  params.validate();
  if (static_cast<int>(x.size()) < 10 * (params.p + params.q))
    throw Error("arma needs a column of at least 10*(p+q) = " +
                std::to_string(10 * (params.p + params.q)) + " points, got " +
                std::to_string(x.size()));
  const auto z = detail::difference(x);
  const ArmaFit fit = hannan_rissanen(z, params);

  const int p = static_cast<int>(fit.phi.size());
  const int q = static_cast<int>(fit.theta.size());
  const int n = static_cast<int>(z.size());
  std::vector<double> resid(n, 0.0);
  std::vector<double> out;
  out.reserve(n + 1);
  for (int t = 0; t <= n; ++t) {
    double pred = fit.constant;
    for (int i = 1; i <= p; ++i)
      if (t - i >= 0) pred += fit.phi[i - 1] * z[t - i];
    for (int j = 1; j <= q; ++j)
      if (t - j >= 0) pred += fit.theta[j - 1] * resid[t - j];
    if (t < n) resid[t] = z[t] - pred;
    out.push_back(std::max(0.0, x[t] + pred));
  }
  return out;
}

// Column-wise differenced ARMA behind the ForecastModel contract. The
// coefficients are estimated once on the training series; prediction replays
// the fitted recursion over the supplied window.
class ArmaModel : public ForecastModel {
public:
  explicit ArmaModel(ArmaParams params) : params_(params) { params_.validate(); }

  void fit(const BucketCountSeries& train) override {
    if (static_cast<int>(train.rows()) < 10 * (params_.p + params_.q))
      throw Error("arma training series shorter than 10*(p+q) rows");
    fits_.clear();
    const Matrix m = train.to_matrix();
    std::vector<double> col(m.rows());
    for (int c = 0; c < m.cols(); ++c) {
      for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
      fits_.push_back(hannan_rissanen(detail::difference(col), params_));
    }
  }

  std::vector<double> predict_next(const Matrix& window) const override {
    if (fits_.empty()) throw Error("arma model is not fitted");
    if (window.cols() != static_cast<int>(fits_.size()))
      throw ShapeError("window column count does not match fitted series");
    if (window.rows() < 2) throw Error("arma prediction needs at least two window rows");
    std::vector<double> out(window.cols());
    std::vector<double> col(window.rows());
    for (int c = 0; c < window.cols(); ++c) {
      for (int r = 0; r < window.rows(); ++r) col[r] = window(r, c);
      out[c] = col.back() + arma_forecast_step(fits_[c], detail::difference(col));
    }
    clamp_nonneg(out);
    return out;
  }

  std::string name() const override { return "arma"; }

  const std::vector<ArmaFit>& fits() const { return fits_; }

  bool ridge_used() const {
    for (const auto& f : fits_)
      if (f.ridge_used) return true;
    return false;
  }

private:
  ArmaParams params_;
  std::vector<ArmaFit> fits_;
};

}  // namespace prescale
