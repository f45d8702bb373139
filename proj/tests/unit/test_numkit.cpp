#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cip/numkit/adam.hpp"
#include "cip/numkit/checkpoint.hpp"
#include "cip/numkit/gaussian_head.hpp"
#include "cip/numkit/mlp.hpp"
#include "generators.hpp"

using namespace cip;

namespace {

MlpParams literal_net() {
  MlpParams p;
  DenseLayer l1;
  l1.weight = Matrix(2, 3);
  l1.weight << 0.5, -0.25, 0.125, -0.75, 0.3, 0.9;
  l1.bias = Vector(3);
  l1.bias << 0.1, -0.2, 0.05;
  DenseLayer l2;
  l2.weight = Matrix(3, 1);
  l2.weight << 1.5, -0.6, 0.8;
  l2.bias = Vector::Constant(1, -0.3);
  p.layers = {l1, l2};
  return p;
}

bool bit_equal(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].weight != b.layers[k].weight || a.layers[k].bias != b.layers[k].bias) return false;
  }
  return true;
}

double max_abs(const MlpParams& p) {
  double m = 0.0;
  for (const auto& l : p.layers) m = std::max({m, l.weight.cwiseAbs().maxCoeff(), l.bias.cwiseAbs().maxCoeff()});
  return m;
}

// Analytic log density of tanh(x) with x ~ N(mu, sigma): sech^2 written as
// 4 / (e^x + e^-x)^2, a different route from the library's.
double squashed_log_density(double x, double mu, double log_std) {
  const double sigma = std::exp(log_std);
  const double z = (x - mu) / sigma;
  const double gauss = -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
  const double ax = std::abs(x);
  const double log_sech_sq = std::log(4.0) - 2.0 * (ax + std::log1p(std::exp(-2.0 * ax)));
  return gauss - log_sech_sq;
}

}  // namespace

TEST_SUITE("numkit") {
  TEST_CASE("identity network passes the input through") {
    MlpParams p;
    p.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2)});
    Vector x(2);
    x << 0.3, -0.3;
    const Vector y = mlp_forward(p, x);
    CHECK(y[0] == 0.3);
    CHECK(y[1] == -0.3);
  }

  TEST_CASE("zero weights leave only the output bias") {
    Rng rng(3);
    MlpShape s{3, {5}, 2};
    MlpParams p = mlp_init(s, rng);
    for (auto& l : p.layers) l.weight.setZero();
    p.layers[0].bias.setZero();
    p.layers[1].bias << 0.25, -1.5;
    for (int i = 0; i < 10; ++i) {
      const Vector y = mlp_forward(p, gen::vec(rng, 3, -5, 5));
      CHECK(y[0] == 0.25);
      CHECK(y[1] == -1.5);
    }
  }

  TEST_CASE("literal two-layer net matches the frozen reference output") {
    Vector x(2);
    x << 0.7, -1.1;
    CHECK(mlp_forward(literal_net(), x)[0] == doctest::Approx(0.7933410586432428).epsilon(1e-13));
  }

  TEST_CASE("forward pass agrees with the loop oracle on random shapes") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const MlpShape s = gen::shape(rng);
      const MlpParams p = mlp_init(s, rng);
      const Vector x = gen::vec(rng, s.input_dim, -2, 2);
      const Vector y = mlp_forward(p, x);
      const Vector ref = gen::loop_forward(p, x);
      REQUIRE(y.size() == s.output_dim);
      CHECK((y - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("batch forward equals row-wise forward") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      const MlpShape s = gen::shape(rng);
      const MlpParams p = mlp_init(s, rng);
      const Matrix X = gen::mat(rng, gen::int_in(rng, 1, 9), s.input_dim, -2, 2);
      const Matrix Y = mlp_forward_batch(p, X);
      const MlpTape tape = mlp_forward_tape(p, X);
      for (Index i = 0; i < X.rows(); ++i) {
        const Vector row = X.row(i).transpose();
        CHECK((Y.row(i).transpose() - mlp_forward(p, row)).cwiseAbs().maxCoeff() < 1e-12);
      }
      CHECK(tape.output() == Y);
    }
  }

  TEST_CASE("dimension mismatch is a configuration error") {
    Rng rng(1);
    const MlpParams p = mlp_init({3, {4}, 1}, rng);
    CHECK_THROWS_AS(mlp_forward(p, Vector::Zero(2)), ConfigError);
    CHECK_THROWS_AS(mlp_gradients(p, Vector::Zero(3), Vector::Zero(2)), ConfigError);
  }

  TEST_CASE("forward and init are deterministic") {
    Rng a(99), b(99);
    const MlpShape s{4, {8, 8}, 3};
    const MlpParams pa = mlp_init(s, a);
    const MlpParams pb = mlp_init(s, b);
    CHECK(bit_equal(pa, pb));
    const Vector x = Vector::LinSpaced(4, -1, 1);
    CHECK(mlp_forward(pa, x) == mlp_forward(pb, x));
  }

  TEST_CASE("zero upstream gives zero gradients") {
    Rng rng(5);
    const MlpParams p = mlp_init({3, {6, 4}, 2}, rng);
    const MlpParams g = mlp_gradients(p, gen::vec(rng, 3), Vector::Zero(2));
    CHECK(max_abs(g) == 0.0);
  }

  TEST_CASE("linear scalar net has dy/dw = x") {
    MlpParams p;
    p.layers.push_back({Matrix::Constant(1, 1, 1.7), Vector::Zero(1)});
    const MlpParams g = mlp_gradients(p, Vector::Constant(1, -0.4), Vector::Ones(1));
    CHECK(g.layers[0].weight(0, 0) == -0.4);
    CHECK(g.layers[0].bias[0] == 1.0);
  }

  TEST_CASE("parameter gradients match central differences on random nets") {
    Rng rng(21);
    for (int trial = 0; trial < 60; ++trial) {
      const MlpShape s = gen::shape(rng);
      const MlpParams p = mlp_init(s, rng);
      const Vector x = gen::vec(rng, s.input_dim, -2, 2);
      const Vector up = gen::vec(rng, s.output_dim);
      const MlpParams g = mlp_gradients(p, x, up);
      const double err =
          gen::fd_max_rel_error(p, g, [&](const MlpParams& q) { return up.dot(mlp_forward(q, x)); });
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("input gradients match central differences") {
    Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
      const MlpShape s = gen::shape(rng);
      const MlpParams p = mlp_init(s, rng);
      const Matrix X = gen::mat(rng, 3, s.input_dim);
      const Matrix U = gen::mat(rng, 3, s.output_dim);
      Matrix dx;
      mlp_backward(p, mlp_forward_tape(p, X), U, &dx);
      const double h = 1e-5;
      for (Index i = 0; i < X.size(); ++i) {
        Matrix Xp = X, Xm = X;
        Xp.data()[i] += h;
        Xm.data()[i] -= h;
        const double num =
            ((mlp_forward_batch(p, Xp).array() * U.array()).sum() - (mlp_forward_batch(p, Xm).array() * U.array()).sum()) /
            (2 * h);
        const double ana = dx.data()[i];
        CHECK(std::abs(num - ana) / std::max(1e-6, std::abs(num) + std::abs(ana)) <= 1e-4);
      }
    }
  }

  TEST_CASE("polyak update endpoints") {
    Rng rng(7);
    const MlpShape s{2, {3}, 1};
    const MlpParams src = mlp_init(s, rng);
    MlpParams tgt = mlp_init(s, rng);
    const MlpParams before = tgt;
    polyak_update(tgt, src, 0.0);
    CHECK(bit_equal(tgt, before));
    polyak_update(tgt, src, 1.0);
    CHECK(bit_equal(tgt, src));
  }

  TEST_CASE("adam: zero gradient keeps params and decays moments") {
    Rng rng(8);
    MlpParams p = mlp_init({2, {3}, 1}, rng);
    AdamState st = AdamState::for_params(p);
    MlpParams g = MlpParams::zeros_like(p);
    g.layers[0].weight(0, 0) = 1.0;
    REQUIRE(adam_step(p, g, st, 1e-3));
    const double m_before = st.first_moment.layers[0].weight(0, 0);
    const double v_before = st.second_moment.layers[0].weight(0, 0);
    const MlpParams frozen = p;
    MlpParams zero = MlpParams::zeros_like(p);
    // The bias-corrected step still moves params along the old momentum, so
    // only untouched coordinates stay exactly fixed.
    adam_step(p, zero, st, 1e-3);
    CHECK(st.step == 2);
    CHECK(st.first_moment.layers[0].weight(0, 0) == doctest::Approx(0.9 * m_before));
    CHECK(st.second_moment.layers[0].weight(0, 0) == doctest::Approx(0.999 * v_before));
    CHECK(p.layers[1].weight == frozen.layers[1].weight);
    CHECK(p.layers[0].weight(1, 2) == frozen.layers[0].weight(1, 2));

    MlpParams q = mlp_init({2, {3}, 1}, rng);
    const MlpParams q0 = q;
    AdamState fresh = AdamState::for_params(q);
    adam_step(q, MlpParams::zeros_like(q), fresh, 1e-3);
    CHECK(bit_equal(q, q0));
  }

  TEST_CASE("adam: first step magnitude is lr |g| / (|g| + eps)") {
    for (double gval : {1e-3, 0.5, -4.0, 250.0}) {
      MlpParams p;
      p.layers.push_back({Matrix::Constant(1, 1, 2.0), Vector::Zero(1)});
      AdamState st = AdamState::for_params(p);
      MlpParams g = MlpParams::zeros_like(p);
      g.layers[0].weight(0, 0) = gval;
      const double lr = 3e-4;
      adam_step(p, g, st, lr);
      const double delta = p.layers[0].weight(0, 0) - 2.0;
      CHECK(std::abs(delta) == doctest::Approx(lr * std::abs(gval) / (std::abs(gval) + 1e-8)).epsilon(1e-9));
      CHECK(delta * gval < 0.0);
    }
  }

  TEST_CASE("adam: quadratic run matches the frozen trajectory") {
    MlpParams p;
    p.layers.push_back({Matrix::Zero(1, 1), Vector::Zero(1)});
    AdamState st = AdamState::for_params(p);
    std::vector<double> losses;
    for (int t = 0; t < 100; ++t) {
      const double w = p.layers[0].weight(0, 0);
      losses.push_back((w - 3) * (w - 3));
      MlpParams g = MlpParams::zeros_like(p);
      g.layers[0].weight(0, 0) = 2 * (w - 3);
      REQUIRE(adam_step(p, g, st, 0.1));
    }
    const double w = p.layers[0].weight(0, 0);
    CHECK(std::abs(w - 3) < 3.0);
    CHECK(w == doctest::Approx(2.9806554375278123).epsilon(1e-12));
    std::vector<double> window;
    for (int k = 0; k < 10; ++k) {
      double s = 0;
      for (int i = 0; i < 10; ++i) s += losses[static_cast<std::size_t>(10 * k + i)];
      window.push_back(s / 10);
    }
    // Decreasing through the approach; afterwards Adam oscillates around the
    // minimum at a level far below the start.
    for (int k = 1; k < 4; ++k) CHECK(window[static_cast<std::size_t>(k)] < window[static_cast<std::size_t>(k - 1)]);
    for (int k = 4; k < 10; ++k) CHECK(window[static_cast<std::size_t>(k)] < 0.01 * window[0]);
  }

  TEST_CASE("adam: non-finite gradient is rejected") {
    Rng rng(9);
    MlpParams p = mlp_init({2, {2}, 1}, rng);
    const MlpParams before = p;
    AdamState st = AdamState::for_params(p);
    MlpParams g = MlpParams::zeros_like(p);
    g.layers[1].bias[0] = std::nan("");
    Diagnostics diag;
    CHECK_FALSE(adam_step(p, g, st, 1e-3, &diag));
    CHECK(bit_equal(p, before));
    CHECK(st.step == 0);
    CHECK(diag.count("adam_rejected") == 1);
  }

  TEST_CASE("gaussian head: clamped log_std keeps the density finite") {
    const auto out = gaussian_head_sample(Vector::Zero(2), Vector::Constant(2, -20.0), Vector::Constant(2, 1.3));
    CHECK(out.log_std[0] == -5.0);
    CHECK(std::abs(out.action[0]) < 1e-2);
    CHECK(std::isfinite(out.per_dim_log_prob.sum()));
  }

  TEST_CASE("gaussian head: standard normal at the mode") {
    const auto out = gaussian_head_sample(Vector::Zero(3), Vector::Zero(3), Vector::Zero(3));
    for (Index i = 0; i < 3; ++i) {
      CHECK(out.action[i] == 0.0);
      CHECK(out.per_dim_log_prob[i] == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
    }
  }

  TEST_CASE("gaussian head: Monte-Carlo raw entropy") {
    Rng rng(31);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto out = gaussian_head_sample(Vector::Zero(1), Vector::Zero(1), standard_normal_vector(rng, 1));
      acc -= out.per_dim_raw_log_prob[0];
    }
    CHECK(std::abs(acc / n - 0.5 * std::log(2 * M_PI * M_E)) < 0.01);
  }

  TEST_CASE("gaussian head: squash correction matches the change of variables") {
    Rng rng(32);
    for (int trial = 0; trial < 2000; ++trial) {
      const Index d = gen::int_in(rng, 1, 4);
      const Vector mean = gen::vec(rng, d, -3, 3);
      const Vector log_std = gen::vec(rng, d, -2, 1);
      const Vector noise = gen::vec(rng, d, -4, 4);
      const auto out = gaussian_head_sample(mean, log_std, noise);
      double ref = 0.0;
      for (Index i = 0; i < d; ++i) ref += squashed_log_density(out.raw_sample[i], mean[i], log_std[i]);
      const double got = out.per_dim_log_prob.sum();
      CHECK(std::abs(std::exp(got) - std::exp(ref)) <= 1e-8 * std::exp(ref));
      CHECK((out.raw_sample - (mean.array() + log_std.array().exp() * noise.array()).matrix()).cwiseAbs().maxCoeff() <
            1e-15);
    }
  }

  TEST_CASE("log(1 - tanh^2) stays exact in the tails") {
    for (double x : {0.0, 0.3, -2.0, 10.0, -40.0, 400.0}) {
      const double ax = std::abs(x);
      const double ref = std::log(4.0) - 2.0 * (ax + std::log1p(std::exp(-2.0 * ax)));
      CHECK(log_one_minus_tanh_sq(x) == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  TEST_CASE("gaussian mlp head gradient matches central differences") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
      const Index din = gen::int_in(rng, 1, 5), da = gen::int_in(rng, 1, 3);
      GaussianMlp net = make_gaussian_mlp(din, da, {6, 5}, rng);
      // Give the output layer nonzero weights so every path is exercised.
      net.net.layers.back().weight = gen::mat(rng, 5, 2 * da, -0.5, 0.5);
      const Matrix X = gen::mat(rng, 4, din);
      const Matrix raw = gen::mat(rng, 4, da, -1.5, 1.5);
      auto nll = [&](const MlpParams& p) {
        GaussianMlp g = net;
        g.net = p;
        return -head_raw_log_prob(gaussian_mlp_eval(g, X).head, raw).sum();
      };
      const GaussianMlpEval ev = gaussian_mlp_eval(net, X);
      const Eigen::ArrayXXd sigma = ev.head.log_std.array().exp();
      const Eigen::ArrayXXd z = (raw - ev.head.mean).array() / sigma;
      const Matrix d_mean = (-z / sigma).matrix();
      const Matrix d_ls = (1.0 - z.square()).matrix();
      const MlpParams g = mlp_backward(net.net, ev.tape, join_gaussian_gradient(ev.head, d_mean, d_ls));
      CHECK(gen::fd_max_rel_error(net.net, g, nll) <= 1e-4);
    }
  }

  TEST_CASE("checkpoint round trip is exact") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
      const MlpParams a = mlp_init(gen::shape(rng), rng);
      const MlpParams b = mlp_init(gen::shape(rng), rng);
      std::vector<CheckpointRecord> recs;
      append_mlp_records(recs, "policy", a);
      append_mlp_records(recs, "critic1", b);
      const auto back = decode_checkpoint(encode_checkpoint(recs));
      REQUIRE(back.size() == recs.size());
      CHECK(bit_equal(extract_mlp(back, "policy"), a));
      CHECK(bit_equal(extract_mlp(back, "critic1"), b));
    }
  }

  TEST_CASE("checkpoint rejects corrupt input") {
    Rng rng(52);
    std::vector<CheckpointRecord> recs;
    append_mlp_records(recs, "q", mlp_init({2, {2}, 1}, rng));
    const std::string bytes = encode_checkpoint(recs);
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
    CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), Error);
    std::string bad = bytes;
    bad[0] ^= 0x55;
    CHECK_THROWS_AS(decode_checkpoint(bad), Error);
    CHECK_THROWS_AS(extract_mlp(recs, "missing"), Error);

    const auto path = std::filesystem::temp_directory_path() / "cip_ckpt_test.bin";
    save_checkpoint(path.string(), recs);
    CHECK(bit_equal(extract_mlp(load_checkpoint(path.string()), "q"), extract_mlp(recs, "q")));
    std::filesystem::remove(path);
  }
}
