#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cip/empower/empower.hpp"
#include "generators.hpp"
#include "toys.hpp"

using namespace cip;

namespace {

// A policy whose head is constant: [mean | log_std] sits in the output bias.
GaussianMlp constant_policy(const Vector& mean, const Vector& log_std, Index d_s) {
  Rng rng(0);
  GaussianMlp p = make_gaussian_mlp(d_s, mean.size(), {4}, rng);
  p.net.layers.back().bias << mean, log_std;
  return p;
}

ActionWeights weights(std::initializer_list<double> w) {
  ActionWeights out;
  out.omega = Eigen::Map<const Vector>(w.begin(), static_cast<Index>(w.size()));
  return out;
}

// Noise that makes the policy head produce exactly the squashed action `a`.
Vector noise_for(const GaussianMlp& policy, const Vector& s, const Vector& a) {
  const Vector out = mlp_forward(policy.net, s);
  const Index d = policy.action_dim();
  Vector n(d);
  for (Index i = 0; i < d; ++i) {
    const double ls = std::clamp(out[d + i], policy.head.log_std_min, policy.head.log_std_max);
    n[i] = (std::atanh(a[i]) - out[i]) * std::exp(-ls);
  }
  return n;
}

}  // namespace

TEST_SUITE("empower") {
  TEST_CASE("inverse model NLL on s' = s + a drops well below the Gaussian entropy") {
    const toys::ToyData d = toys::make_toy(true, 10000, 2, 1);
    Rng rng(2);
    InverseDynamicsModel model = make_inverse_model(2, 2, {64, 64}, rng, 1e-3);
    toys::train_inverse(model, d, 2000, 256, 3);
    CHECK(toys::inverse_nll(model, d) <= -1.0);
  }

  TEST_CASE("inverse model NLL on the action-independent system matches the marginal") {
    const toys::ToyData d = toys::make_toy(false, 10000, 2, 4);
    Rng rng(5);
    InverseDynamicsModel model = make_inverse_model(2, 2, {64, 64}, rng, 1e-3);
    toys::train_inverse(model, d, 2000, 256, 6);
    // The raw action is N(0, 1) whatever (s, s') is.
    CHECK(std::abs(toys::inverse_nll(model, d) - 0.5 * std::log(2 * M_PI * M_E)) <= 0.1);
  }

  TEST_CASE("empty batch is a no-op") {
    Rng rng(7);
    InverseDynamicsModel model = make_inverse_model(2, 1, {8}, rng);
    const MlpParams before = model.net.net;
    CHECK_FALSE(fit_inverse_dynamics(model, Matrix(0, 2), Matrix(0, 1), Matrix(0, 2)).has_value());
    CHECK_FALSE(fit_inverse_dynamics(model, std::vector<Transition>{}).has_value());
    CHECK(model.net.net.layers[0].weight == before.layers[0].weight);
    CHECK(model.adam.step == 0);
  }

  TEST_CASE("non-finite NLL is rejected") {
    Rng rng(8);
    InverseDynamicsModel model = make_inverse_model(1, 1, {4}, rng);
    Diagnostics diag;
    Matrix s = Matrix::Zero(2, 1);
    s(0, 0) = std::nan("");
    fit_inverse_dynamics(model, s, Matrix::Zero(2, 1), Matrix::Zero(2, 1), &diag);
    CHECK(diag.count("inverse_rejected") == 1);
    CHECK(model.adam.step == 0);
  }

  TEST_CASE("weighted policy entropy reduces to -log pi with unit weights") {
    Rng rng(9);
    for (int t = 0; t < 50; ++t) {
      const Index d = gen::int_in(rng, 1, 4);
      const GaussianMlp pol = constant_policy(gen::vec(rng, d), gen::vec(rng, d, -1, 0.5), 3);
      const Vector s = gen::vec(rng, 3), noise = standard_normal_vector(rng, d);
      const WeightedEntropy e = weighted_entropy_policy(s, pol, ActionWeights::uniform(d), noise);
      const Vector out = mlp_forward(pol.net, s);
      const auto h = gaussian_head_sample(out.head(d), out.tail(d), noise);
      CHECK(e.value == doctest::Approx(-h.per_dim_log_prob.sum()).epsilon(1e-13));
    }
  }

  TEST_CASE("a zero weight annihilates its dimension") {
    const GaussianMlp pol = constant_policy(Vector::Constant(2, 0.3), Vector::Constant(2, -0.7), 2);
    const WeightedEntropy e = weighted_entropy_policy(Vector::Zero(2), pol, weights({1.0, 0.0}), Vector::Constant(2, 2.5));
    CHECK(e.per_dim[1] == 0.0);
    CHECK(e.value == e.per_dim[0]);
  }

  TEST_CASE("diagonal Gaussian entropy by Monte Carlo") {
    Vector log_std(3);
    log_std << -0.5, 0.0, 0.4;
    const GaussianMlp pol = constant_policy(Vector::Zero(3), log_std, 2);
    Rng rng(10);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
      acc += weighted_entropy_policy(Vector::Zero(2), pol, ActionWeights::uniform(3), standard_normal_vector(rng, 3), false).value;
    double closed = 0.0;
    for (Index i = 0; i < 3; ++i) closed += 0.5 * std::log(2 * M_PI * M_E * std::exp(2 * log_std[i]));
    CHECK(std::abs(acc / n - closed) <= 0.01 * std::abs(closed));
  }

  TEST_CASE("fresh inverse model at the mode") {
    Rng rng(11);
    const InverseDynamicsModel model = make_inverse_model(3, 2, {16, 16}, rng);
    const WeightedEntropy e =
        weighted_entropy_inverse(gen::vec(rng, 3), gen::vec(rng, 3), Vector::Zero(2), model, weights({0.5, 1.5}));
    CHECK(e.per_dim[0] == doctest::Approx(0.9189385332046727 * 0.5).epsilon(1e-13));
    CHECK(e.per_dim[1] == doctest::Approx(0.9189385332046727 * 1.5).epsilon(1e-13));
    CHECK(weighted_entropy_inverse(gen::vec(rng, 3), gen::vec(rng, 3), gen::vec(rng, 2), model, weights({0.0, 0.0})).value ==
          0.0);
  }

  TEST_CASE("identical densities give zero empowerment") {
    Rng rng(12);
    InverseDynamicsModel model = make_inverse_model(2, 2, {8}, rng);
    model.net.net.layers.back().bias << 0.2, -0.4, -0.3, 0.1;
    GaussianMlp pol = constant_policy((Vector(2) << 0.2, -0.4).finished(), (Vector(2) << -0.3, 0.1).finished(), 2);
    for (int t = 0; t < 50; ++t) {
      const auto e = empowerment_term(gen::vec(rng, 2), gen::vec(rng, 2, -0.99, 0.99), gen::vec(rng, 2), pol, model,
                                      weights({0.7, 1.3}));
      CHECK(std::abs(e.value) < 1e-12);
      CHECK(empowerment_term(gen::vec(rng, 2), gen::vec(rng, 2, -0.9, 0.9), gen::vec(rng, 2), pol, model, weights({0, 0}))
                .value == 0.0);
    }
  }

  TEST_CASE("decomposition, linearity and argmax invariance") {
    Rng rng(13);
    InverseDynamicsModel model = make_inverse_model(3, 2, {8, 8}, rng);
    model.net.net.layers.back().weight = gen::mat(rng, 8, 4, -0.5, 0.5);
    GaussianMlp pol = make_gaussian_mlp(3, 2, {8}, rng);
    pol.net.layers.back().weight = gen::mat(rng, 8, 4, -0.5, 0.5);
    const ActionWeights w = weights({0.4, 1.6});
    std::vector<double> base, scaled;
    for (int t = 0; t < 200; ++t) {
      const Vector s = gen::vec(rng, 3), sn = gen::vec(rng, 3), a = gen::vec(rng, 2, -0.95, 0.95);
      const EmpowermentEstimate e = empowerment_term(s, a, sn, pol, model, w);
      const double hp = weighted_entropy_policy(s, pol, w, noise_for(pol, s, a)).value;
      const double hi = weighted_entropy_inverse(s, sn, a, model, w).value;
      CHECK(e.value == doctest::Approx(hp - hi).epsilon(1e-9));
      CHECK(e.h_inverse == doctest::Approx(hi).epsilon(1e-12));
      CHECK(e.per_dim.sum() == doctest::Approx(e.value).epsilon(1e-12));
      const double c = cip::uniform(rng, 0.1, 10.0);
      ActionWeights wc;
      wc.omega = w.omega * c;
      CHECK(empowerment_term(s, a, sn, pol, model, wc).value == doctest::Approx(c * e.value).epsilon(1e-12));
      base.push_back(e.value);
      ActionWeights w3;
      w3.omega = w.omega * 3.7;
      scaled.push_back(empowerment_term(s, a, sn, pol, model, w3).value);
    }
    std::vector<std::size_t> ia(base.size()), ib(base.size());
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    std::sort(ia.begin(), ia.end(), [&](auto x, auto y) { return base[x] < base[y]; });
    std::sort(ib.begin(), ib.end(), [&](auto x, auto y) { return scaled[x] < scaled[y]; });
    CHECK(ia == ib);
  }

  TEST_CASE("trained estimators separate controllable from action-independent systems") {
    Rng rng(14);
    GaussianMlp pol = make_gaussian_mlp(2, 2, {8}, rng);  // N(0, 1) raw for every state
    const ActionWeights w = ActionWeights::uniform(2);

    const toys::ToyData ctrl = toys::make_toy(true, 10000, 2, 15);
    InverseDynamicsModel m1 = make_inverse_model(2, 2, {64, 64}, rng, 1e-3);
    toys::train_inverse(m1, ctrl, 2000, 256, 16);
    const auto e1 = empowerment_batch_mean(ctrl.s, ctrl.a, ctrl.s_next, pol, m1, w);
    CHECK(e1.value > 0.0);
    // The inverse model is sharper than the policy on the same states.
    CHECK(e1.h_inverse < e1.h_policy);

    const toys::ToyData tele = toys::make_toy(false, 10000, 2, 17);
    InverseDynamicsModel m2 = make_inverse_model(2, 2, {64, 64}, rng, 1e-3);
    toys::train_inverse(m2, tele, 2000, 256, 18);
    CHECK(std::abs(empowerment_batch_mean(tele.s, tele.a, tele.s_next, pol, m2, w).value) <= 0.05);
  }

  TEST_CASE("length mismatches are configuration errors") {
    Rng rng(19);
    const InverseDynamicsModel model = make_inverse_model(2, 2, {4}, rng);
    const GaussianMlp pol = make_gaussian_mlp(2, 2, {4}, rng);
    CHECK_THROWS_AS(weighted_entropy_inverse(Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), model, weights({1.0})),
                    ConfigError);
    CHECK_THROWS_AS(empowerment_term(Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), pol, model, weights({1, 1, 1})),
                    ConfigError);
  }
}
