#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prescale/errors.hpp"
#include "prescale/matrix.hpp"
#include "prescale/predictor.hpp"
#include "prescale/series.hpp"
#include "prescale/window.hpp"

namespace prescale {

struct TransformerConfig {
  int d_model = 64;
  int heads = 4;
  int encoder_layers = 6;
  int decoder_layers = 6;
  double dropout = 0.2;
  int warmup_steps = 5000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_epsilon = 1e-9;
  std::vector<int> periods = {2016, 288};
  std::uint64_t seed = 0;
  int window_len = 576;
  int batch_size = 32;
  int train_steps = 2000;

  void validate() const {
    if (d_model <= 0 || heads <= 0 || encoder_layers <= 0 || decoder_layers <= 0)
      throw ConfigError("transformer dimensions must be positive");
    if (d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (warmup_steps <= 0) throw ConfigError("warmup_steps must be positive");
    if (periods.empty()) throw ConfigError("at least one positional-encoding period required");
    for (int p : periods)
      if (p <= 0) throw ConfigError("positional-encoding periods must be positive");
    if (window_len <= 0 || batch_size <= 0 || train_steps < 0)
      throw ConfigError("window_len and batch_size must be positive");
  }
};

// Periodic positional encoding: the sum of unit sines whose periods match the
// configured seasonalities. The same scalar is added to every component of
// the embedding at that position. Integer phase reduction keeps the encoding
// exactly periodic.
inline double positional_encoding(long long pos, const std::vector<int>& periods) {
  if (periods.empty()) throw ConfigError("positional encoding needs at least one period");
  double sum = 0.0;
  for (int p : periods) {
    const long long phase = pos % p;
    sum += std::sin(2.0 * M_PI * static_cast<double>(phase) / static_cast<double>(p));
  }
  return sum;
}

// Warmup learning-rate schedule: linear ramp for warmup_steps, then inverse
// square-root decay, scaled by d_model^-1/2. Peaks exactly at step = warmup.
inline double lr_schedule(long long step, int d_model, int warmup_steps) {
  if (step < 1) throw ConfigError("lr_schedule steps start at 1");
  const double s = static_cast<double>(step);
  const double ramp = s * std::pow(static_cast<double>(warmup_steps), -1.5);
  return std::pow(static_cast<double>(d_model), -0.5) * std::min(std::pow(s, -0.5), ramp);
}

namespace nn {

struct Param {
  Matrix value, grad, m1, m2;

  void init(int rows, int cols) {
    value = Matrix(rows, cols);
    grad = Matrix(rows, cols);
    m1 = Matrix(rows, cols);
    m2 = Matrix(rows, cols);
  }
};

struct LinearP {
  Param w;  // in x out
  Param b;  // 1 x out

  void init(std::mt19937_64& rng, int in, int out) {
    w.init(in, out);
    b.init(1, out);
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : w.value.data()) v = u(rng);
  }
};

struct LayerNormP {
  Param gamma, beta;

  void init(int dim) {
    gamma.init(1, dim);
    beta.init(1, dim);
    gamma.value.fill(1.0);
  }
};

struct AttnP {
  LinearP q, k, v, o;

  void init(std::mt19937_64& rng, int d) {
    q.init(rng, d, d);
    k.init(rng, d, d);
    v.init(rng, d, d);
    o.init(rng, d, d);
  }
};

struct EncLayerP {
  AttnP attn;
  LayerNormP ln1;
  LinearP ff;
  LayerNormP ln2;
};

struct DecLayerP {
  AttnP self_attn;
  LayerNormP ln1;
  AttnP cross;
  LayerNormP ln2;
  LinearP ff;
  LayerNormP ln3;
};

struct LinearCache {
  Matrix x;
};

struct DropCache {
  bool active = false;
  Matrix mask;
};

struct LNCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

struct AttnCache {
  Matrix xq, xkv;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // one Sq x Sk row-stochastic matrix per head
  Matrix concat;
  bool causal = false;
};

struct EncLayerCache {
  AttnCache attn;
  DropCache drop1;
  LNCache ln1;
  Matrix h1;
  LinearCache ff;
  DropCache drop2;
  LNCache ln2;
};

struct DecLayerCache {
  AttnCache self_attn;
  DropCache drop1;
  LNCache ln1;
  Matrix h1;
  AttnCache cross;
  DropCache drop2;
  LNCache ln2;
  Matrix h2;
  LinearCache ff;
  DropCache drop3;
  LNCache ln3;
};

// Per-forward activations, reusable between samples.
struct Workspace {
  LinearCache enc_input, dec_input;
  DropCache enc_in_drop, dec_in_drop;
  std::vector<EncLayerCache> enc;
  std::vector<DecLayerCache> dec;
  Matrix enc_out;
  LinearCache output;
  Matrix prediction;
};

constexpr double kLayerNormEps = 1e-6;

inline void linear_forward(const LinearP& p, const Matrix& x, Matrix& y, LinearCache* cache) {
  if (cache) cache->x = x;
  matmul(x, p.w.value, y);
  for (int r = 0; r < y.rows(); ++r)
    for (int c = 0; c < y.cols(); ++c) y(r, c) += p.b.value(0, c);
}

inline void linear_backward(LinearP& p, const LinearCache& cache, const Matrix& dy,
                            Matrix* dx_accum) {
  matmul_tn_acc(cache.x, dy, p.w.grad);
  for (int r = 0; r < dy.rows(); ++r)
    for (int c = 0; c < dy.cols(); ++c) p.b.grad(0, c) += dy(r, c);
  if (dx_accum) {
    Matrix dx;
    matmul_nt(dy, p.w.value, dx);
    add_inplace(*dx_accum, dx);
  }
}

inline void layernorm_forward(const LayerNormP& p, const Matrix& x, Matrix& y, LNCache& cache) {
  const int d = x.cols();
  y = Matrix(x.rows(), d);
  cache.xhat = Matrix(x.rows(), d);
  cache.inv_std.assign(x.rows(), 0.0);
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += xr[c];
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[r] = inv;
    for (int c = 0; c < d; ++c) {
      const double xhat = (xr[c] - mean) * inv;
      cache.xhat(r, c) = xhat;
      y(r, c) = p.gamma.value(0, c) * xhat + p.beta.value(0, c);
    }
  }
}

inline void layernorm_backward(LayerNormP& p, const LNCache& cache, const Matrix& dy,
                               Matrix& dx_accum) {
  const int d = dy.cols();
  for (int r = 0; r < dy.rows(); ++r) {
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (int c = 0; c < d; ++c) {
      const double xhat = cache.xhat(r, c);
      const double g = dy(r, c);
      p.gamma.grad(0, c) += g * xhat;
      p.beta.grad(0, c) += g;
      const double dxhat = g * p.gamma.value(0, c);
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
    }
    const double inv = cache.inv_std[r];
    for (int c = 0; c < d; ++c) {
      const double dxhat = dy(r, c) * p.gamma.value(0, c);
      dx_accum(r, c) +=
          inv * (dxhat - sum_dxhat / d - cache.xhat(r, c) * sum_dxhat_xhat / d);
    }
  }
}

inline void copy_head(const Matrix& src, int off, int dk, Matrix& dst) {
  if (dst.rows() != src.rows() || dst.cols() != dk) dst = Matrix(src.rows(), dk);
  for (int r = 0; r < src.rows(); ++r) {
    const double* s = src.row(r) + off;
    double* d = dst.row(r);
    for (int c = 0; c < dk; ++c) d[c] = s[c];
  }
}

inline void add_head(const Matrix& src, int off, Matrix& dst) {
  for (int r = 0; r < src.rows(); ++r) {
    const double* s = src.row(r);
    double* d = dst.row(r) + off;
    for (int c = 0; c < src.cols(); ++c) d[c] += s[c];
  }
}

// Multi-head scaled dot-product attention. With `causal` set, query i only
// sees keys 0..i; masked entries are skipped outright (never computed), so
// outputs are bit-for-bit independent of future positions. The unmasked path
// runs on dense per-head matmuls instead (decoder sequences are short, the
// wide encoder/cross attentions are where the time goes).
inline void attention_forward(const AttnP& p, const Matrix& xq, const Matrix& xkv, bool causal,
                              int heads, Matrix& y, AttnCache& cache) {
  const int d = p.q.w.value.cols();
  const int dk = d / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  cache.xq = xq;
  cache.xkv = xkv;
  cache.causal = causal;
  linear_forward(p.q, xq, cache.q, nullptr);
  linear_forward(p.k, xkv, cache.k, nullptr);
  linear_forward(p.v, xkv, cache.v, nullptr);

  const int sq = xq.rows(), sk = xkv.rows();
  cache.probs.assign(heads, Matrix(sq, sk));
  cache.concat = Matrix(sq, d);

  if (causal) {
    std::vector<double> scores(sk);
    for (int a = 0; a < heads; ++a) {
      const int off = a * dk;
      Matrix& probs = cache.probs[a];
      for (int i = 0; i < sq; ++i) {
        const int allowed = std::min(i + 1, sk);
        const double* qi = cache.q.row(i) + off;
        double max_s = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < allowed; ++j) {
          const double* kj = cache.k.row(j) + off;
          double s = 0.0;
          for (int c = 0; c < dk; ++c) s += qi[c] * kj[c];
          s *= inv_sqrt_dk;
          scores[j] = s;
          max_s = std::max(max_s, s);
        }
        double z = 0.0;
        for (int j = 0; j < allowed; ++j) {
          scores[j] = std::exp(scores[j] - max_s);
          z += scores[j];
        }
        double* out = cache.concat.row(i) + off;
        for (int j = 0; j < allowed; ++j) {
          const double pj = scores[j] / z;
          probs(i, j) = pj;
          const double* vj = cache.v.row(j) + off;
          for (int c = 0; c < dk; ++c) out[c] += pj * vj[c];
        }
      }
    }
  } else {
    Matrix qh, kh, vh, oh;
    for (int a = 0; a < heads; ++a) {
      const int off = a * dk;
      copy_head(cache.q, off, dk, qh);
      copy_head(cache.k, off, dk, kh);
      copy_head(cache.v, off, dk, vh);
      Matrix& probs = cache.probs[a];
      matmul_nt(qh, kh, probs);
      for (int i = 0; i < sq; ++i) {
        double* row = probs.row(i);
        double max_s = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < sk; ++j) max_s = std::max(max_s, row[j] * inv_sqrt_dk);
        double z = 0.0;
        for (int j = 0; j < sk; ++j) {
          row[j] = std::exp(row[j] * inv_sqrt_dk - max_s);
          z += row[j];
        }
        const double inv_z = 1.0 / z;
        for (int j = 0; j < sk; ++j) row[j] *= inv_z;
      }
      matmul(probs, vh, oh);
      for (int r = 0; r < sq; ++r) {
        const double* s = oh.row(r);
        double* out = cache.concat.row(r) + off;
        for (int c = 0; c < dk; ++c) out[c] = s[c];
      }
    }
  }
  linear_forward(p.o, cache.concat, y, nullptr);
}

inline void attention_backward(AttnP& p, const AttnCache& cache, const Matrix& dy, int heads,
                               Matrix& dxq_accum, Matrix& dxkv_accum) {
  const int d = p.q.w.value.cols();
  const int dk = d / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  const int sq = cache.xq.rows(), sk = cache.xkv.rows();

  // Through the output projection.
  Matrix dconcat(sq, d);
  LinearCache ocache{cache.concat};
  linear_backward(p.o, ocache, dy, &dconcat);

  Matrix dq(sq, d), dkm(sk, d), dv(sk, d);

  if (cache.causal) {
    std::vector<double> dp(sk), ds(sk);
    for (int a = 0; a < heads; ++a) {
      const int off = a * dk;
      const Matrix& probs = cache.probs[a];
      for (int i = 0; i < sq; ++i) {
        const int allowed = std::min(i + 1, sk);
        const double* doi = dconcat.row(i) + off;

        double dot_dp_p = 0.0;
        for (int j = 0; j < allowed; ++j) {
          const double* vj = cache.v.row(j) + off;
          double s = 0.0;
          for (int c = 0; c < dk; ++c) s += doi[c] * vj[c];
          dp[j] = s;
          dot_dp_p += s * probs(i, j);
          double* dvj = dv.row(j) + off;
          const double pij = probs(i, j);
          for (int c = 0; c < dk; ++c) dvj[c] += pij * doi[c];
        }
        for (int j = 0; j < allowed; ++j) ds[j] = probs(i, j) * (dp[j] - dot_dp_p);

        double* dqi = dq.row(i) + off;
        const double* qi = cache.q.row(i) + off;
        for (int j = 0; j < allowed; ++j) {
          const double dsij = ds[j] * inv_sqrt_dk;
          const double* kj = cache.k.row(j) + off;
          double* dkj = dkm.row(j) + off;
          for (int c = 0; c < dk; ++c) {
            dqi[c] += dsij * kj[c];
            dkj[c] += dsij * qi[c];
          }
        }
      }
    }
  } else {
    Matrix qh, kh, vh, doh, dsm, dqh, dkh, dvh;
    for (int a = 0; a < heads; ++a) {
      const int off = a * dk;
      const Matrix& probs = cache.probs[a];
      copy_head(cache.q, off, dk, qh);
      copy_head(cache.k, off, dk, kh);
      copy_head(cache.v, off, dk, vh);
      copy_head(dconcat, off, dk, doh);

      matmul_nt(doh, vh, dsm);  // dP
      for (int i = 0; i < sq; ++i) {
        double* dsi = dsm.row(i);
        const double* pi = probs.row(i);
        double dot = 0.0;
        for (int j = 0; j < sk; ++j) dot += dsi[j] * pi[j];
        for (int j = 0; j < sk; ++j) dsi[j] = pi[j] * (dsi[j] - dot) * inv_sqrt_dk;
      }
      matmul(dsm, kh, dqh);
      add_head(dqh, off, dq);
      if (dkh.rows() != sk || dkh.cols() != dk) dkh = Matrix(sk, dk);
      dkh.fill(0.0);
      matmul_tn_acc(dsm, qh, dkh);
      add_head(dkh, off, dkm);
      if (dvh.rows() != sk || dvh.cols() != dk) dvh = Matrix(sk, dk);
      dvh.fill(0.0);
      matmul_tn_acc(probs, doh, dvh);
      add_head(dvh, off, dv);
    }
  }

  LinearCache qcache{cache.xq}, kcache{cache.xkv}, vcache{cache.xkv};
  linear_backward(p.q, qcache, dq, &dxq_accum);
  linear_backward(p.k, kcache, dkm, &dxkv_accum);
  linear_backward(p.v, vcache, dv, &dxkv_accum);
}

inline void dropout_forward(Matrix& x, double rate, std::mt19937_64& rng, DropCache& cache) {
  cache.active = true;
  cache.mask = Matrix(x.rows(), x.cols());
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double m = (u(rng) < keep) ? 1.0 / keep : 0.0;
    cache.mask.data()[i] = m;
    x.data()[i] *= m;
  }
}

inline void dropout_backward(const DropCache& cache, Matrix& d) {
  if (!cache.active) return;
  for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] *= cache.mask.data()[i];
}

}  // namespace nn

// Encoder/decoder network over bucket-count windows: a linear input layer
// lifts each B-wide row to d_model, the periodic positional encoding is added
// broadcast, the encoder stack applies (self-attention, position-wise linear)
// sub-layers with residual + layer normalization, and the decoder starts from
// the last window row, adds causal self-attention plus cross-attention over
// the encoder output, and a final linear layer maps back to B counts.
class TransformerNet {
public:
  TransformerNet(TransformerConfig cfg, int input_dim) : cfg_(std::move(cfg)), input_dim_(input_dim) {
    cfg_.validate();
    if (input_dim_ <= 0) throw ConfigError("input dimension must be positive");
    std::mt19937_64 rng(cfg_.seed);
    enc_input_.init(rng, input_dim_, cfg_.d_model);
    dec_input_.init(rng, input_dim_, cfg_.d_model);
    enc_.resize(cfg_.encoder_layers);
    for (auto& layer : enc_) {
      layer.attn.init(rng, cfg_.d_model);
      layer.ln1.init(cfg_.d_model);
      layer.ff.init(rng, cfg_.d_model, cfg_.d_model);
      layer.ln2.init(cfg_.d_model);
    }
    dec_.resize(cfg_.decoder_layers);
    for (auto& layer : dec_) {
      layer.self_attn.init(rng, cfg_.d_model);
      layer.ln1.init(cfg_.d_model);
      layer.cross.init(rng, cfg_.d_model);
      layer.ln2.init(cfg_.d_model);
      layer.ff.init(rng, cfg_.d_model, cfg_.d_model);
      layer.ln3.init(cfg_.d_model);
    }
    output_.init(rng, cfg_.d_model, input_dim_);
  }

  const TransformerConfig& config() const { return cfg_; }
  int input_dim() const { return input_dim_; }

  // Runs the network. `window` is the normalized window_len x B input;
  // `dec_in` holds the decoder input rows (row 0 is the last window row in
  // production; extra rows enable the teacher-forced multi-step mode).
  // Dropout is applied only when `train` is set; `rng` must then be supplied.
  const Matrix& forward(const Matrix& window, const Matrix& dec_in, bool train,
                        std::mt19937_64* rng, nn::Workspace& ws) const {
    require_shape(window, cfg_.window_len, input_dim_, "transformer window");
    if (dec_in.cols() != input_dim_ || dec_in.rows() < 1)
      throw ShapeError("decoder input must be L x B with L >= 1");
    if (train && rng == nullptr) throw Error("training-mode forward needs an rng");

    const bool drop = train && cfg_.dropout > 0.0;
    ws.enc_in_drop.active = false;
    ws.dec_in_drop.active = false;

    // Encoder embedding + positional encoding.
    Matrix x;
    nn::linear_forward(enc_input_, window, x, &ws.enc_input);
    for (int r = 0; r < x.rows(); ++r) {
      const double pe = positional_encoding(r, cfg_.periods);
      for (int c = 0; c < x.cols(); ++c) x(r, c) += pe;
    }
    if (drop) nn::dropout_forward(x, cfg_.dropout, *rng, ws.enc_in_drop);

    ws.enc.resize(enc_.size());
    for (std::size_t l = 0; l < enc_.size(); ++l) {
      auto& cache = ws.enc[l];
      const auto& p = enc_[l];
      Matrix a;
      nn::attention_forward(p.attn, x, x, false, cfg_.heads, a, cache.attn);
      cache.drop1.active = false;
      if (drop) nn::dropout_forward(a, cfg_.dropout, *rng, cache.drop1);
      add_inplace(a, x);
      Matrix h1;
      nn::layernorm_forward(p.ln1, a, h1, cache.ln1);
      cache.h1 = h1;
      Matrix f;
      nn::linear_forward(p.ff, h1, f, &cache.ff);
      cache.drop2.active = false;
      if (drop) nn::dropout_forward(f, cfg_.dropout, *rng, cache.drop2);
      add_inplace(f, h1);
      nn::layernorm_forward(p.ln2, f, x, cache.ln2);
    }
    ws.enc_out = x;

    // Decoder embedding continues the positional index from the window tail.
    Matrix y;
    nn::linear_forward(dec_input_, dec_in, y, &ws.dec_input);
    for (int r = 0; r < y.rows(); ++r) {
      const double pe = positional_encoding(cfg_.window_len - 1 + r, cfg_.periods);
      for (int c = 0; c < y.cols(); ++c) y(r, c) += pe;
    }
    if (drop) nn::dropout_forward(y, cfg_.dropout, *rng, ws.dec_in_drop);

    ws.dec.resize(dec_.size());
    for (std::size_t l = 0; l < dec_.size(); ++l) {
      auto& cache = ws.dec[l];
      const auto& p = dec_[l];
      Matrix a;
      nn::attention_forward(p.self_attn, y, y, true, cfg_.heads, a, cache.self_attn);
      cache.drop1.active = false;
      if (drop) nn::dropout_forward(a, cfg_.dropout, *rng, cache.drop1);
      add_inplace(a, y);
      Matrix h1;
      nn::layernorm_forward(p.ln1, a, h1, cache.ln1);
      cache.h1 = h1;
      Matrix c;
      nn::attention_forward(p.cross, h1, ws.enc_out, false, cfg_.heads, c, cache.cross);
      cache.drop2.active = false;
      if (drop) nn::dropout_forward(c, cfg_.dropout, *rng, cache.drop2);
      add_inplace(c, h1);
      Matrix h2;
      nn::layernorm_forward(p.ln2, c, h2, cache.ln2);
      cache.h2 = h2;
      Matrix f;
      nn::linear_forward(p.ff, h2, f, &cache.ff);
      cache.drop3.active = false;
      if (drop) nn::dropout_forward(f, cfg_.dropout, *rng, cache.drop3);
      add_inplace(f, h2);
      nn::layernorm_forward(p.ln3, f, y, cache.ln3);
    }

    nn::linear_forward(output_, y, ws.prediction, &ws.output);
    return ws.prediction;
  }

  // Backpropagates d(prediction) through the workspace of the last forward,
  // accumulating parameter gradients.
  void backward(nn::Workspace& ws, const Matrix& dout) {
    Matrix dy(ws.output.x.rows(), cfg_.d_model);
    nn::linear_backward(output_, ws.output, dout, &dy);

    Matrix denc(ws.enc_out.rows(), cfg_.d_model);
    for (std::size_t li = dec_.size(); li-- > 0;) {
      auto& cache = ws.dec[li];
      auto& p = dec_[li];
      Matrix df = Matrix(dy.rows(), cfg_.d_model);
      Matrix dh2 = Matrix(dy.rows(), cfg_.d_model);
      nn::layernorm_backward(p.ln3, cache.ln3, dy, df);
      dh2 = df;  // residual branch
      nn::dropout_backward(cache.drop3, df);
      nn::linear_backward(p.ff, cache.ff, df, &dh2);

      Matrix dc(dy.rows(), cfg_.d_model);
      Matrix dh1(dy.rows(), cfg_.d_model);
      nn::layernorm_backward(p.ln2, cache.ln2, dh2, dc);
      dh1 = dc;
      nn::dropout_backward(cache.drop2, dc);
      nn::attention_backward(p.cross, cache.cross, dc, cfg_.heads, dh1, denc);

      Matrix da(dy.rows(), cfg_.d_model);
      Matrix dx(dy.rows(), cfg_.d_model);
      nn::layernorm_backward(p.ln1, cache.ln1, dh1, da);
      dx = da;
      nn::dropout_backward(cache.drop1, da);
      nn::attention_backward(p.self_attn, cache.self_attn, da, cfg_.heads, dx, dx);
      dy = dx;
    }
    nn::dropout_backward(ws.dec_in_drop, dy);
    nn::linear_backward(dec_input_, ws.dec_input, dy, nullptr);

    for (std::size_t li = enc_.size(); li-- > 0;) {
      auto& cache = ws.enc[li];
      auto& p = enc_[li];
      Matrix df(denc.rows(), cfg_.d_model);
      Matrix dh1(denc.rows(), cfg_.d_model);
      nn::layernorm_backward(p.ln2, cache.ln2, denc, df);
      dh1 = df;
      nn::dropout_backward(cache.drop2, df);
      nn::linear_backward(p.ff, cache.ff, df, &dh1);

      Matrix da(denc.rows(), cfg_.d_model);
      Matrix dx(denc.rows(), cfg_.d_model);
      nn::layernorm_backward(p.ln1, cache.ln1, dh1, da);
      dx = da;
      nn::dropout_backward(cache.drop1, da);
      nn::attention_backward(p.attn, cache.attn, da, cfg_.heads, dx, dx);
      denc = dx;
    }
    nn::dropout_backward(ws.enc_in_drop, denc);
    nn::linear_backward(enc_input_, ws.enc_input, denc, nullptr);
  }

  // Forward + squared-error backward in one go. Returns scale * mean squared
  // error of this sample; gradients accumulate scaled by `scale`.
  double accumulate_gradients(const Matrix& window, const Matrix& dec_in, const Matrix& target,
                              double scale, bool train, std::mt19937_64* rng, nn::Workspace& ws) {
    const Matrix& pred = forward(window, dec_in, train, rng, ws);
    if (!pred.same_shape(target)) throw ShapeError("target shape does not match prediction");
    const double n = static_cast<double>(pred.rows()) * pred.cols();
    Matrix dout(pred.rows(), pred.cols());
    double loss = 0.0;
    for (int r = 0; r < pred.rows(); ++r)
      for (int c = 0; c < pred.cols(); ++c) {
        const double e = pred(r, c) - target(r, c);
        loss += e * e / n;
        dout(r, c) = 2.0 * e / n * scale;
      }
    backward(ws, dout);
    return loss * scale;
  }

  template <typename Fn>
  void visit_params(Fn&& fn) {
    auto linear = [&](const std::string& name, nn::LinearP& l) {
      fn(name + ".w", l.w);
      fn(name + ".b", l.b);
    };
    auto norm = [&](const std::string& name, nn::LayerNormP& l) {
      fn(name + ".gamma", l.gamma);
      fn(name + ".beta", l.beta);
    };
    auto attn = [&](const std::string& name, nn::AttnP& a) {
      linear(name + ".q", a.q);
      linear(name + ".k", a.k);
      linear(name + ".v", a.v);
      linear(name + ".o", a.o);
    };
    linear("enc_input", enc_input_);
    linear("dec_input", dec_input_);
    for (std::size_t i = 0; i < enc_.size(); ++i) {
      const std::string base = "enc." + std::to_string(i);
      attn(base + ".attn", enc_[i].attn);
      norm(base + ".ln1", enc_[i].ln1);
      linear(base + ".ff", enc_[i].ff);
      norm(base + ".ln2", enc_[i].ln2);
    }
    for (std::size_t i = 0; i < dec_.size(); ++i) {
      const std::string base = "dec." + std::to_string(i);
      attn(base + ".self", dec_[i].self_attn);
      norm(base + ".ln1", dec_[i].ln1);
      attn(base + ".cross", dec_[i].cross);
      norm(base + ".ln2", dec_[i].ln2);
      linear(base + ".ff", dec_[i].ff);
      norm(base + ".ln3", dec_[i].ln3);
    }
    linear("output", output_);
  }

  template <typename Fn>
  void visit_params(Fn&& fn) const {
    const_cast<TransformerNet*>(this)->visit_params(
        [&](const std::string& name, nn::Param& p) { fn(name, static_cast<const nn::Param&>(p)); });
  }

  void zero_grads() {
    visit_params([](const std::string&, nn::Param& p) { p.grad.fill(0.0); });
  }

  void adam_step(double lr, long long step) {
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2, eps = cfg_.adam_epsilon;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
    visit_params([&](const std::string&, nn::Param& p) {
      for (std::size_t i = 0; i < p.value.data().size(); ++i) {
        const double g = p.grad.data()[i];
        p.m1.data()[i] = b1 * p.m1.data()[i] + (1.0 - b1) * g;
        p.m2.data()[i] = b2 * p.m2.data()[i] + (1.0 - b2) * g * g;
        const double mhat = p.m1.data()[i] / corr1;
        const double vhat = p.m2.data()[i] / corr2;
        p.value.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    });
  }

  nn::LinearP& output_layer() { return output_; }

private:
  TransformerConfig cfg_;
  int input_dim_;
  nn::LinearP enc_input_, dec_input_;
  std::vector<nn::EncLayerP> enc_;
  std::vector<nn::DecLayerP> dec_;
  nn::LinearP output_;
};

struct TrainLogEntry {
  long long step;
  double lr;
  double loss;
};

// Mini-batch training against one-step targets: squared-error loss, Adam with
// the configured betas/epsilon, learning rate from lr_schedule, deterministic
// shuffling and dropout streams derived from the seed.
inline std::vector<TrainLogEntry> train_transformer(TransformerNet& net,
                                                    const WindowDataset& train) {
  if (train.empty()) throw Error("training dataset is empty");
  const TransformerConfig& cfg = net.config();
  if (train.window_len() != cfg.window_len)
    throw ShapeError("dataset window length does not match the configuration");

  std::mt19937_64 order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);

  std::vector<std::size_t> deck(train.size());
  for (std::size_t i = 0; i < deck.size(); ++i) deck[i] = i;
  std::shuffle(deck.begin(), deck.end(), order_rng);
  std::size_t cursor = 0;

  std::vector<TrainLogEntry> log;
  log.reserve(cfg.train_steps);
  nn::Workspace ws;

  for (long long step = 1; step <= cfg.train_steps; ++step) {
    net.zero_grads();
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == deck.size()) {
        std::shuffle(deck.begin(), deck.end(), order_rng);
        cursor = 0;
      }
      const std::size_t idx = deck[cursor++];
      const Matrix window = train.window(idx);
      Matrix dec_in(1, window.cols());
      for (int c = 0; c < window.cols(); ++c) dec_in(0, c) = window(window.rows() - 1, c);
      Matrix target(1, window.cols());
      const auto y = train.target(idx);
      for (int c = 0; c < window.cols(); ++c) target(0, c) = y[c];
      batch_loss += net.accumulate_gradients(window, dec_in, target, 1.0 / cfg.batch_size, true,
                                             &dropout_rng, ws);
    }
    if (!std::isfinite(batch_loss))
      throw Error("non-finite training loss at step " + std::to_string(step));
    const double lr = lr_schedule(step, cfg.d_model, cfg.warmup_steps);
    net.adam_step(lr, step);
    log.push_back({step, lr, batch_loss});
  }
  return log;
}

// Central-finite-difference validation of the analytic gradients. Requires
// dropout 0 (deterministic loss surface). Returns the worst relative error
// over every parameter, with a small absolute floor in the denominator so
// structurally-zero gradients compare cleanly.
inline double gradient_check(TransformerNet& net, const Matrix& window, const Matrix& dec_in,
                             const Matrix& target) {
  if (net.config().dropout != 0.0) throw ConfigError("gradient check requires dropout = 0");
  nn::Workspace ws;
  net.zero_grads();
  net.accumulate_gradients(window, dec_in, target, 1.0, false, nullptr, ws);

  std::vector<double> analytic;
  net.visit_params([&](const std::string&, nn::Param& p) {
    for (double g : p.grad.data()) analytic.push_back(g);
  });

  auto loss_at = [&]() {
    const Matrix& pred = net.forward(window, dec_in, false, nullptr, ws);
    const double n = static_cast<double>(pred.rows()) * pred.cols();
    double loss = 0.0;
    for (int r = 0; r < pred.rows(); ++r)
      for (int c = 0; c < pred.cols(); ++c) {
        const double e = pred(r, c) - target(r, c);
        loss += e * e / n;
      }
    return loss;
  };

  const double h = 1e-5;
  double worst = 0.0;
  std::size_t flat = 0;
  net.visit_params([&](const std::string&, nn::Param& p) {
    for (std::size_t i = 0; i < p.value.data().size(); ++i, ++flat) {
      double& theta = p.value.data()[i];
      const double orig = theta;
      theta = orig + h;
      const double lp = loss_at();
      theta = orig - h;
      const double lm = loss_at();
      theta = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double ga = analytic[flat];
      // The absolute floor keeps structurally-zero gradients (for example a
      // key-projection bias, which cancels inside the softmax) from turning
      // finite-difference cancellation noise into a spurious relative error.
      const double rel = std::fabs(ga - numeric) / std::max(std::fabs(ga) + std::fabs(numeric), 1e-4);
      worst = std::max(worst, rel);
    }
  });
  return worst;
}

namespace detail {

inline std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double parse_hex_double(const std::string& s, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "bad float literal: '" + s + "'");
  }
}

}  // namespace detail

// Transformer behind the ForecastModel contract: owns the fitted network and
// the per-column scaler, normalizes incoming windows and denormalizes
// predictions.
class TransformerModel : public ForecastModel {
public:
  explicit TransformerModel(TransformerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  void fit(const BucketCountSeries& train) override {
    auto [train_ds, test_ds] = make_windows(train, cfg_.window_len, 1.0);
    (void)test_ds;
    scaler_ = train_ds.scaler();
    net_ = std::make_unique<TransformerNet>(cfg_, static_cast<int>(train.buckets()));
    log_ = train_transformer(*net_, train_ds);
  }

  std::vector<double> predict_next(const Matrix& window) const override {
    if (!net_) throw Error("transformer model is not fitted");
    require_shape(window, cfg_.window_len, net_->input_dim(), "prediction window");
    const Matrix norm = scaler_.normalize(window);
    Matrix dec_in(1, norm.cols());
    for (int c = 0; c < norm.cols(); ++c) dec_in(0, c) = norm(norm.rows() - 1, c);
    nn::Workspace ws;
    const Matrix& pred = net_->forward(norm, dec_in, false, nullptr, ws);
    std::vector<double> row(pred.cols());
    for (int c = 0; c < pred.cols(); ++c) row[c] = pred(0, c);
    row = scaler_.denormalize_row(row);
    clamp_nonneg(row);
    return row;
  }

  std::string name() const override { return "transformer"; }

  const std::vector<TrainLogEntry>& train_log() const { return log_; }
  const ColumnScaler& scaler() const { return scaler_; }
  const TransformerConfig& config() const { return cfg_; }
  TransformerNet& net() {
    if (!net_) throw Error("transformer model is not fitted");
    return *net_;
  }
  const TransformerNet& net() const {
    if (!net_) throw Error("transformer model is not fitted");
    return *net_;
  }
  bool fitted() const { return net_ != nullptr; }

  // Encoder self-attention maps of a normalized window, for heatmap export.
  std::vector<std::vector<Matrix>> encoder_attention(const Matrix& window_raw) const {
    if (!net_) throw Error("transformer model is not fitted");
    const Matrix norm = scaler_.normalize(window_raw);
    Matrix dec_in(1, norm.cols());
    for (int c = 0; c < norm.cols(); ++c) dec_in(0, c) = norm(norm.rows() - 1, c);
    nn::Workspace ws;
    net_->forward(norm, dec_in, false, nullptr, ws);
    std::vector<std::vector<Matrix>> maps;
    for (const auto& layer : ws.enc) maps.push_back(layer.attn.probs);
    return maps;
  }

  void restore(std::unique_ptr<TransformerNet> net, ColumnScaler scaler) {
    net_ = std::move(net);
    scaler_ = std::move(scaler);
  }

private:
  TransformerConfig cfg_;
  std::unique_ptr<TransformerNet> net_;
  ColumnScaler scaler_;
  std::vector<TrainLogEntry> log_;
};

// Versioned text checkpoint; doubles are written as hex floats so the
// round trip is bit exact.
inline void save_checkpoint(const TransformerModel& model, std::ostream& out) {
  const TransformerConfig& c = model.config();
  const TransformerNet& net = model.net();
  out << "prescale-checkpoint v1\n";
  out << "d_model=" << c.d_model << ",heads=" << c.heads << ",encoder_layers=" << c.encoder_layers
      << ",decoder_layers=" << c.decoder_layers << ",dropout=" << detail::hex_double(c.dropout)
      << ",warmup_steps=" << c.warmup_steps << ",adam_beta1=" << detail::hex_double(c.adam_beta1)
      << ",adam_beta2=" << detail::hex_double(c.adam_beta2)
      << ",adam_epsilon=" << detail::hex_double(c.adam_epsilon) << ",seed=" << c.seed
      << ",window_len=" << c.window_len << ",batch_size=" << c.batch_size
      << ",train_steps=" << c.train_steps << ",input_dim=" << net.input_dim() << "\n";
  out << "periods=";
  for (std::size_t i = 0; i < c.periods.size(); ++i) out << (i ? "," : "") << c.periods[i];
  out << "\n";
  out << "scaler_min";
  for (double v : model.scaler().mins()) out << " " << detail::hex_double(v);
  out << "\nscaler_max";
  for (double v : model.scaler().maxs()) out << " " << detail::hex_double(v);
  out << "\n";
  net.visit_params([&](const std::string& name, const nn::Param& p) {
    out << "param " << name << " " << p.value.rows() << " " << p.value.cols() << "\n";
    for (int r = 0; r < p.value.rows(); ++r) {
      for (int col = 0; col < p.value.cols(); ++col)
        out << (col ? " " : "") << detail::hex_double(p.value(r, col));
      out << "\n";
    }
  });
  out << "end\n";
}

inline void save_checkpoint(const TransformerModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint: " + path);
  save_checkpoint(model, out);
}

inline TransformerModel load_checkpoint(std::istream& in, const std::string& source = "<checkpoint>") {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError(source, lineno + 1, "unexpected end of file");
    ++lineno;
    return line;
  };
  if (next_line() != "prescale-checkpoint v1")
    throw ParseError(source, lineno, "not a prescale v1 checkpoint");

  TransformerConfig cfg;
  int input_dim = 0;
  for (const auto& field : detail::split_csv(next_line())) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "bad config field: " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "d_model") cfg.d_model = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "heads") cfg.heads = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "encoder_layers") cfg.encoder_layers = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "decoder_layers") cfg.decoder_layers = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "dropout") cfg.dropout = detail::parse_hex_double(value, source, lineno);
    else if (key == "warmup_steps") cfg.warmup_steps = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "adam_beta1") cfg.adam_beta1 = detail::parse_hex_double(value, source, lineno);
    else if (key == "adam_beta2") cfg.adam_beta2 = detail::parse_hex_double(value, source, lineno);
    else if (key == "adam_epsilon") cfg.adam_epsilon = detail::parse_hex_double(value, source, lineno);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_integer(value, source, lineno));
    else if (key == "window_len") cfg.window_len = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "train_steps") cfg.train_steps = static_cast<int>(detail::parse_integer(value, source, lineno));
    else if (key == "input_dim") input_dim = static_cast<int>(detail::parse_integer(value, source, lineno));
    else throw ParseError(source, lineno, "unknown config field: " + key);
  }

  const std::string periods_line = next_line();
  if (periods_line.rfind("periods=", 0) != 0) throw ParseError(source, lineno, "expected periods line");
  cfg.periods.clear();
  for (const auto& p : detail::split_csv(periods_line.substr(8)))
    cfg.periods.push_back(static_cast<int>(detail::parse_integer(p, source, lineno)));

  auto parse_scaler_line = [&](const std::string& prefix) {
    const std::string l = next_line();
    if (l.rfind(prefix, 0) != 0) throw ParseError(source, lineno, "expected " + prefix + " line");
    std::istringstream is(l.substr(prefix.size()));
    std::vector<double> vals;
    std::string tok;
    while (is >> tok) vals.push_back(detail::parse_hex_double(tok, source, lineno));
    return vals;
  };
  const auto mins = parse_scaler_line("scaler_min");
  const auto maxs = parse_scaler_line("scaler_max");
  if (static_cast<int>(mins.size()) != input_dim)
    throw ParseError(source, lineno, "scaler width does not match input_dim");

  auto net = std::make_unique<TransformerNet>(cfg, input_dim);
  net->visit_params([&](const std::string& name, nn::Param& p) {
    std::istringstream hdr(next_line());
    std::string tag, got_name;
    int rows = 0, cols = 0;
    hdr >> tag >> got_name >> rows >> cols;
    if (tag != "param" || got_name != name || rows != p.value.rows() || cols != p.value.cols())
      throw ParseError(source, lineno, "checkpoint structure mismatch at " + name);
    for (int r = 0; r < rows; ++r) {
      std::istringstream rowstream(next_line());
      std::string tok;
      for (int col = 0; col < cols; ++col) {
        if (!(rowstream >> tok)) throw ParseError(source, lineno, "short parameter row in " + name);
        p.value(r, col) = detail::parse_hex_double(tok, source, lineno);
      }
    }
  });
  if (next_line() != "end") throw ParseError(source, lineno, "missing end marker");

  TransformerModel model(cfg);
  model.restore(std::move(net), ColumnScaler(mins, maxs));
  return model;
}

inline TransformerModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path);
  return load_checkpoint(in, path);
}

// Heatmap export: encoder self-attention weights of one normalized window,
// one row per (layer, head, query, key).
inline void export_attention(const TransformerModel& model, const Matrix& window,
                             std::ostream& out) {
  const auto maps = model.encoder_attention(window);
  out << "layer,head,query_pos,key_pos,weight\n";
  char buf[40];
  for (std::size_t layer = 0; layer < maps.size(); ++layer)
    for (std::size_t head = 0; head < maps[layer].size(); ++head) {
      const Matrix& m = maps[layer][head];
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
          std::snprintf(buf, sizeof(buf), "%.9g", m(i, j));
          out << layer << "," << head << "," << i << "," << j << "," << buf << "\n";
        }
    }
}

}  // namespace prescale
