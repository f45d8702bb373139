#pragma once

#include <string>
#include <vector>

#include "cip/envs/transition.hpp"
#include "cip/numkit/linalg.hpp"

namespace cip {

/// Reward-row coefficients of the fitted SEM. The *_std vectors are the same
/// coefficients on standardized columns; thresholds and weights use those.
struct CausalMatrices {
  Vector m_s_to_r;
  Vector m_a_to_r;
  Vector m_s_to_r_std;
  Vector m_a_to_r_std;
  Index fitted_on = 0;
  std::string method = "direct_lingam";
};

struct UncontrollableSet {
  std::vector<Index> indices;
  double theta = 0.0;

  bool contains(Index i) const;
};

struct ActionWeights {
  Vector omega;
  std::string normalization = "sum_to_dim";

  static ActionWeights uniform(Index d_a);
};

struct CausalConfig {
  double theta = 0.05;
  double w_min = 0.05;
  Index causal_sample_size = 10000;
  /// Force r to the end of the causal order (rewards have no children in a
  /// single-step factored MDP).
  bool reward_sink = true;
};

/// Columns [s1..s_dS, a1..a_dA, r].
Matrix transitions_to_columns(const std::vector<Transition>& batch);
std::vector<std::string> transition_column_names(Index d_s, Index d_a);

/// One DirectLiNGAM fit over [s, a, r]; fills both reward rows. Throws
/// ConfigError if the batch is smaller than causal_sample_size.
CausalMatrices fit_reward_matrices(const std::vector<Transition>& batch, const CausalConfig& config);

/// State-to-reward row only (action entries left empty).
CausalMatrices fit_state_reward_mask(const std::vector<Transition>& batch, const CausalConfig& config);

struct ActionFit {
  CausalMatrices matrices;
  ActionWeights weights;
};

ActionFit fit_action_reward_weights(const std::vector<Transition>& batch, const CausalConfig& config);

/// { i : |m_s_to_r[i]| < theta }, using standardized coefficients when present.
UncontrollableSet uncontrollable_set(const CausalMatrices& m, double theta);

/// omega_i = |m_a[i]| + w_min, rescaled so sum(omega) == d_A.
ActionWeights action_weights_from(const Vector& m_a_to_r, double w_min);

Vector reweight_actions(const Vector& a, const ActionWeights& w);

/// {method, fitted_on, m_s_to_r, m_a_to_r, m_s_to_r_std, m_a_to_r_std, omega,
///  theta, uncontrollable}
std::string matrices_to_json(const CausalMatrices& m, const ActionWeights& w, double theta);

struct MatricesDocument {
  CausalMatrices matrices;
  ActionWeights weights;
  double theta = 0.05;
};

MatricesDocument matrices_from_json(const std::string& text);

}  // namespace cip
