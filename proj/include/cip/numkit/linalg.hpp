#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cip {

// Row-major so that a batch of samples is one contiguous row per sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Matrix standard_normal_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline Vector standard_normal_vector(Rng& rng, Index n) {
  Vector v(n);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

// splitmix64 finalizer; the building block for counter-keyed draws.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

}  // namespace cip
