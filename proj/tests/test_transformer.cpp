#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "prescale/transformer.hpp"

using namespace prescale;

namespace {

TransformerConfig tiny_config(std::uint64_t seed = 1) {
  TransformerConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.dropout = 0.0;
  cfg.window_len = 6;
  cfg.periods = {6};
  cfg.seed = seed;
  return cfg;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("positional encoding formula") {
  CHECK(positional_encoding(0, {2016, 288}) == 0.0);
  CHECK_THAT(positional_encoding(504, {2016}), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(positional_encoding(288, {2016, 288}),
             Catch::Matchers::WithinAbs(0.7818314824680298, 1e-12));
  // periods {2016, 288} repeat every lcm = 2016 positions
  for (long long pos : {0LL, 17LL, 388LL, 2015LL})
    CHECK_THAT(positional_encoding(pos + 2016, {2016, 288}),
               Catch::Matchers::WithinAbs(positional_encoding(pos, {2016, 288}), 1e-9));
}

TEST_CASE("learning-rate schedule peaks at warmup") {
  CHECK_THAT(lr_schedule(5000, 64, 5000),
             Catch::Matchers::WithinRel(0.0017677669529663686, 1e-12));
  for (int s = 1; s < 5000; ++s) CHECK(lr_schedule(s, 64, 5000) < lr_schedule(s + 1, 64, 5000));
  for (int s = 5000; s < 6000; ++s) CHECK(lr_schedule(s, 64, 5000) >= lr_schedule(s + 1, 64, 5000));
}

TEST_CASE("zero output layer predicts its bias") {
  auto cfg = tiny_config();
  TransformerNet net(cfg, 2);
  net.output_layer().w.value.fill(0.0);
  net.output_layer().b.value(0, 0) = 0.25;
  net.output_layer().b.value(0, 1) = -1.5;

  std::mt19937_64 rng(3);
  const Matrix window = random_matrix(cfg.window_len, 2, rng);
  Matrix dec_in(1, 2);
  dec_in(0, 0) = window(5, 0);
  dec_in(0, 1) = window(5, 1);

  nn::Workspace ws;
  const Matrix& pred = net.forward(window, dec_in, false, nullptr, ws);
  CHECK(pred(0, 0) == 0.25);
  CHECK(pred(0, 1) == -1.5);
}

TEST_CASE("attention rows are stochastic at every layer and head") {
  auto cfg = tiny_config(7);
  cfg.encoder_layers = 2;
  cfg.decoder_layers = 2;
  TransformerNet net(cfg, 2);

  std::mt19937_64 rng(11);
  const Matrix window = random_matrix(cfg.window_len, 2, rng);
  const Matrix dec_in = random_matrix(3, 2, rng);

  nn::Workspace ws;
  net.forward(window, dec_in, false, nullptr, ws);

  auto check_rows = [](const std::vector<Matrix>& heads) {
    for (const auto& probs : heads)
      for (int i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < probs.cols(); ++j) sum += probs(i, j);
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
      }
  };
  REQUIRE(ws.enc.size() == 2);
  REQUIRE(ws.dec.size() == 2);
  for (const auto& layer : ws.enc) check_rows(layer.attn.probs);
  for (const auto& layer : ws.dec) {
    check_rows(layer.self_attn.probs);
    check_rows(layer.cross.probs);
  }
}

TEST_CASE("forward is deterministic without dropout") {
  auto cfg = tiny_config(13);
  TransformerNet a(cfg, 2), b(cfg, 2);
  std::mt19937_64 rng(5);
  const Matrix window = random_matrix(cfg.window_len, 2, rng);
  Matrix dec_in(1, 2);
  dec_in(0, 0) = window(5, 0);
  dec_in(0, 1) = window(5, 1);

  nn::Workspace wa, wb;
  const Matrix pa = a.forward(window, dec_in, false, nullptr, wa);
  const Matrix pb = b.forward(window, dec_in, false, nullptr, wb);
  CHECK(pa.data() == pb.data());
  const Matrix pa2 = a.forward(window, dec_in, false, nullptr, wa);
  CHECK(pa.data() == pa2.data());
}

TEST_CASE("look-ahead mask blocks future decoder positions exactly") {
  auto cfg = tiny_config(17);
  cfg.decoder_layers = 2;
  TransformerNet net(cfg, 2);
  std::mt19937_64 rng(19);
  const Matrix window = random_matrix(cfg.window_len, 2, rng);
  const int L = 5;
  Matrix dec_in = random_matrix(L, 2, rng);

  nn::Workspace ws;
  const Matrix base = net.forward(window, dec_in, false, nullptr, ws);

  for (int t = 0; t < L - 1; ++t) {
    Matrix perturbed = dec_in;
    for (int r = t + 1; r < L; ++r)
      for (int c = 0; c < 2; ++c) perturbed(r, c) += 10.0 + r + c;
    const Matrix out = net.forward(window, perturbed, false, nullptr, ws);
    for (int r = 0; r <= t; ++r)
      for (int c = 0; c < 2; ++c) CHECK(out(r, c) == base(r, c));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 3; ++rep) {
    auto cfg = tiny_config(100 + rep);
    cfg.heads = (rep % 2) ? 1 : 2;
    cfg.window_len = 4 + rep;
    cfg.periods = {5, 3};
    const int B = 1 + rep % 2;
    TransformerNet net(cfg, B);
    const int L = 1 + rep;  // exercises the causal mask too
    const Matrix window = random_matrix(cfg.window_len, B, rng);
    const Matrix dec_in = random_matrix(L, B, rng);
    const Matrix target = random_matrix(L, B, rng);
    CHECK(gradient_check(net, window, dec_in, target) < 1e-4);
  }
}

TEST_CASE("zero window zeroes the input-layer weight gradients") {
  auto cfg = tiny_config(29);
  TransformerNet net(cfg, 2);
  Matrix window(cfg.window_len, 2);
  Matrix dec_in(1, 2);
  Matrix target(1, 2);
  target(0, 0) = 0.4;

  nn::Workspace ws;
  net.zero_grads();
  net.accumulate_gradients(window, dec_in, target, 1.0, false, nullptr, ws);
  net.visit_params([](const std::string& name, nn::Param& p) {
    if (name == "enc_input.w" || name == "dec_input.w")
      for (double g : p.grad.data()) CHECK(g == 0.0);
    if (name == "output.b") {
      double mag = 0.0;
      for (double g : p.grad.data()) mag += std::fabs(g);
      CHECK(mag > 0.0);
    }
  });
}

TEST_CASE("doubling the loss scale doubles every gradient") {
  auto cfg = tiny_config(31);
  TransformerNet net(cfg, 2);
  std::mt19937_64 rng(37);
  const Matrix window = random_matrix(cfg.window_len, 2, rng);
  const Matrix dec_in = random_matrix(1, 2, rng);
  const Matrix target = random_matrix(1, 2, rng);

  nn::Workspace ws;
  net.zero_grads();
  net.accumulate_gradients(window, dec_in, target, 1.0, false, nullptr, ws);
  std::vector<double> g1;
  net.visit_params([&](const std::string&, nn::Param& p) {
    for (double g : p.grad.data()) g1.push_back(g);
  });

  net.zero_grads();
  net.accumulate_gradients(window, dec_in, target, 2.0, false, nullptr, ws);
  std::size_t i = 0;
  net.visit_params([&](const std::string&, nn::Param& p) {
    for (double g : p.grad.data()) CHECK(g == 2.0 * g1[i++]);
  });
}

namespace {

BucketCountSeries constant_series(int rows, long long value) {
  BucketCountSeries s(300, 0, 1, "cat");
  for (int r = 0; r < rows; ++r) s.append_row({value});
  return s;
}

}  // namespace

TEST_CASE("training drives a constant series to near-zero loss") {
  TransformerConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.dropout = 0.0;  // deterministic loss surface; constant is exactly representable
  cfg.window_len = 4;
  cfg.periods = {4};
  cfg.warmup_steps = 40;
  cfg.batch_size = 4;
  cfg.train_steps = 200;
  cfg.seed = 41;

  TransformerModel model(cfg);
  model.fit(constant_series(24, 7));
  REQUIRE(model.train_log().size() == 200);
  CHECK(model.train_log().back().loss < 1e-6);

  // constant in, constant out: prediction equals the constant after
  // denormalization regardless of the learned parameters
  Matrix window(4, 1);
  for (int r = 0; r < 4; ++r) window(r, 0) = 7.0;
  CHECK_THAT(model.predict_next(window)[0], Catch::Matchers::WithinAbs(7.0, 1e-9));
}

TEST_CASE("training learns a sinusoid whose period matches the encoding") {
  const int period = 24;
  BucketCountSeries series(300, 0, 1, "cat");
  for (int t = 0; t < 420; ++t) {
    const double v = 50.0 + 40.0 * std::sin(2.0 * M_PI * t / period);
    series.append_row({static_cast<long long>(std::llround(v))});
  }

  TransformerConfig cfg;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.dropout = 0.1;
  cfg.window_len = 2 * period;
  cfg.periods = {period};
  cfg.warmup_steps = 100;
  cfg.batch_size = 8;
  cfg.train_steps = 700;
  cfg.seed = 43;

  auto [train_ds, test_ds] = make_windows(series, cfg.window_len, 0.8);
  REQUIRE(!test_ds.empty());

  TransformerNet net(cfg, 1);
  train_transformer(net, train_ds);

  nn::Workspace ws;
  double sq_err = 0.0;
  for (std::size_t i = 0; i < test_ds.size(); ++i) {
    const Matrix window = test_ds.window(i);
    Matrix dec_in(1, 1);
    dec_in(0, 0) = window(window.rows() - 1, 0);
    const Matrix& pred = net.forward(window, dec_in, false, nullptr, ws);
    const double e = pred(0, 0) - test_ds.target(i)[0];
    sq_err += e * e;
  }
  const double test_mse = sq_err / static_cast<double>(test_ds.size());
  CHECK(test_mse < 0.01);
}

TEST_CASE("same seed trains to identical checkpoints") {
  TransformerConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.dropout = 0.2;
  cfg.window_len = 4;
  cfg.periods = {4};
  cfg.warmup_steps = 20;
  cfg.batch_size = 2;
  cfg.train_steps = 25;
  cfg.seed = 47;

  BucketCountSeries series(300, 0, 1, "cat");
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<long long> c(0, 9);
  for (int r = 0; r < 16; ++r) series.append_row({c(rng)});

  TransformerModel a(cfg), b(cfg);
  a.fit(series);
  b.fit(series);
  std::ostringstream ca, cb;
  save_checkpoint(a, ca);
  save_checkpoint(b, cb);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("checkpoint round trip preserves predictions bit for bit") {
  TransformerConfig cfg = tiny_config(53);
  cfg.train_steps = 10;
  cfg.batch_size = 2;
  cfg.warmup_steps = 10;
  cfg.window_len = 4;
  cfg.dropout = 0.2;

  BucketCountSeries series(300, 0, 2, "cat");
  std::mt19937_64 rng(57);
  std::uniform_int_distribution<long long> c(0, 20);
  for (int r = 0; r < 14; ++r) series.append_row({c(rng), c(rng)});

  TransformerModel model(cfg);
  model.fit(series);

  std::ostringstream out;
  save_checkpoint(model, out);
  std::istringstream in(out.str());
  TransformerModel loaded = load_checkpoint(in);

  Matrix window(4, 2);
  for (auto& v : window.data()) v = static_cast<double>(c(rng));
  CHECK(model.predict_next(window) == loaded.predict_next(window));

  std::ostringstream again;
  save_checkpoint(loaded, again);
  CHECK(out.str() == again.str());
}

TEST_CASE("attention export emits one row per weight") {
  TransformerConfig cfg = tiny_config(59);
  cfg.train_steps = 2;
  cfg.batch_size = 2;
  cfg.window_len = 4;

  BucketCountSeries series(300, 0, 1, "cat");
  for (int r = 0; r < 12; ++r) series.append_row({r % 5});
  TransformerModel model(cfg);
  model.fit(series);

  Matrix window(4, 1);
  for (int r = 0; r < 4; ++r) window(r, 0) = r;
  std::ostringstream out;
  export_attention(model, window, out);

  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "layer,head,query_pos,key_pos,weight");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == cfg.encoder_layers * cfg.heads * cfg.window_len * cfg.window_len);
}

TEST_CASE("non-finite loss aborts with the step number") {
  TransformerConfig cfg = tiny_config(61);
  cfg.window_len = 4;
  cfg.batch_size = 2;
  cfg.train_steps = 5;

  BucketCountSeries series(300, 0, 1, "cat");
  for (int r = 0; r < 12; ++r) series.append_row({r % 3});
  auto [train_ds, test_ds] = make_windows(series, cfg.window_len, 1.0);
  (void)test_ds;

  TransformerNet net(cfg, 1);
  net.output_layer().b.value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH(train_transformer(net, train_ds),
                    Catch::Matchers::ContainsSubstring("non-finite") &&
                        Catch::Matchers::ContainsSubstring("step 1"));
}

TEST_CASE("config validation") {
  TransformerConfig cfg = tiny_config();
  cfg.d_model = 10;
  cfg.heads = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.periods.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
