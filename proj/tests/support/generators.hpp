#pragma once

// Small hand-rolled generators for property tests. Every generator takes an
// explicit Rng so a failing case is reproducible from the printed seed.

#include <cmath>
#include <functional>
#include <vector>

#include "cip/envs/transition.hpp"
#include "cip/numkit/linalg.hpp"
#include "cip/numkit/mlp.hpp"

namespace gen {

using cip::Index;
using cip::Matrix;
using cip::Rng;
using cip::Vector;

inline Index int_in(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline Vector vec(Rng& rng, Index n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = cip::uniform(rng, lo, hi);
  return v;
}

inline Matrix mat(Rng& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = cip::uniform(rng, lo, hi);
  return m;
}

inline cip::MlpShape shape(Rng& rng, Index max_in = 6, Index max_hidden_layers = 3, Index max_width = 8,
                           Index max_out = 4) {
  cip::MlpShape s;
  s.input_dim = int_in(rng, 1, max_in);
  const Index layers = int_in(rng, 0, max_hidden_layers);
  for (Index k = 0; k < layers; ++k) s.hidden.push_back(int_in(rng, 1, max_width));
  s.output_dim = int_in(rng, 1, max_out);
  return s;
}

inline cip::Transition transition(Rng& rng, Index d_s, Index d_a) {
  cip::Transition t;
  t.s = vec(rng, d_s, -2.0, 2.0);
  t.a = vec(rng, d_a);
  t.r = cip::uniform(rng, -1.0, 1.0);
  t.s_next = vec(rng, d_s, -2.0, 2.0);
  t.done = cip::uniform(rng, 0.0, 1.0) < 0.1;
  return t;
}

// Straight-line forward pass with explicit loops; shares no code with mlp.cpp.
inline Vector loop_forward(const cip::MlpParams& p, const Vector& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& L = p.layers[k];
    std::vector<double> z(static_cast<std::size_t>(L.weight.cols()), 0.0);
    for (Index j = 0; j < L.weight.cols(); ++j) {
      double acc = L.bias[j];
      for (Index i = 0; i < L.weight.rows(); ++i) acc += h[static_cast<std::size_t>(i)] * L.weight(i, j);
      z[static_cast<std::size_t>(j)] = k + 1 < p.layers.size() ? std::tanh(acc) : acc;
    }
    h = std::move(z);
  }
  return Eigen::Map<Vector>(h.data(), static_cast<Index>(h.size()));
}

// Central finite differences of f over every parameter; returns the max
// relative error against `grads` with denominator max(1e-6, |a| + |b|).
inline double fd_max_rel_error(cip::MlpParams params, const cip::MlpParams& grads,
                               const std::function<double(const cip::MlpParams&)>& f, double h = 1e-5) {
  double worst = 0.0;
  auto check = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const double up = f(params);
    slot = keep - h;
    const double down = f(params);
    slot = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(numeric - analytic) / std::max(1e-6, std::abs(numeric) + std::abs(analytic));
    worst = std::max(worst, err);
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& L = params.layers[k];
    for (Index i = 0; i < L.weight.size(); ++i) check(L.weight.data()[i], grads.layers[k].weight.data()[i]);
    for (Index i = 0; i < L.bias.size(); ++i) check(L.bias[i], grads.layers[k].bias[i]);
  }
  return worst;
}

}  // namespace gen
