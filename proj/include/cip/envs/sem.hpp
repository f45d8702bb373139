#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cip/numkit/linalg.hpp"

namespace cip {

enum class NoiseDist { Uniform, Laplace, Gaussian };

const char* noise_dist_name(NoiseDist d);
NoiseDist parse_noise_dist(const std::string& name);

/// Linear SEM x = B x + e. B[j,k] is the coefficient of x_k in x_j; the graph
/// must be acyclic. Gaussian noise exists only to record the non-identifiable
/// case.
struct SemSpec {
  Index p = 0;
  Matrix B;
  std::vector<NoiseDist> noise;
  Vector noise_scale;  // uniform half-width or laplace scale or gaussian std
  Index reward_index = -1;  // -1 when no variable plays the reward

  /// Throws ConfigError for shape problems, cycles or non-positive scales.
  void validate() const;
  /// A topological order of the variables (parents first).
  std::vector<Index> causal_order() const;
};

SemSpec make_sem(const Matrix& B, NoiseDist dist = NoiseDist::Uniform, double scale = 1.0,
                 Index reward_index = -1);

/// n x p samples drawn ancestrally.
Matrix sem_generate(const SemSpec& spec, Index n, std::uint64_t seed);

struct RandomSemOptions {
  Index p = 5;
  double edge_prob = 0.4;
  double min_abs_coef = 0.5;
  double max_abs_coef = 1.0;
  NoiseDist dist = NoiseDist::Uniform;
};

/// Random DAG under a hidden permutation with coefficients of magnitude in
/// [min_abs_coef, max_abs_coef] and random signs.
SemSpec random_sem(const RandomSemOptions& options, std::uint64_t seed);

/// SEM documents: {"B": [[...]], "noise": "uniform", "scale": 1.0, "reward_index": k}.
/// "noise" and "scale" may also be per-variable arrays.
SemSpec sem_from_json(const std::string& text);
std::string sem_to_json(const SemSpec& spec);

}  // namespace cip
