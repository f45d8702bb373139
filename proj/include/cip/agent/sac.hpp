#pragma once

#include <cstdint>
#include <optional>

#include "cip/agent/config.hpp"
#include "cip/agent/replay.hpp"
#include "cip/causal/reward_matrices.hpp"
#include "cip/empower/empower.hpp"
#include "cip/envs/envs.hpp"
#include "cip/numkit/adam.hpp"
#include "cip/numkit/checkpoint.hpp"
#include "cip/numkit/gaussian_head.hpp"

namespace cip {

struct AgentState {
  AgentConfig config;
  Index d_s = 0;
  Index d_a = 0;

  GaussianMlp policy;
  AdamState policy_adam;
  MlpParams q1, q2, q1_target, q2_target;
  AdamState q1_adam, q2_adam;
  InverseDynamicsModel inverse;

  // Current causal snapshot; replaced wholesale on each refit.
  bool has_matrices = false;
  CausalMatrices matrices;
  ActionWeights weights;
  UncontrollableSet uncontrollable;
  std::uint64_t matrices_hash = 0;

  ReplayBuffer replay;
  ReplayBuffer local;

  Rng rng;
  std::int64_t step = 0;
  std::int64_t grad_steps = 0;
  Diagnostics diagnostics;

  /// Action weights used by the bonus: ones unless use_action_weights is set
  /// and a snapshot exists.
  const Vector& omega() const;
  Vector unit_omega;
};

AgentState make_agent(const AgentConfig& config, Index d_s, Index d_a);

/// Critic input [s, a].
Matrix critic_inputs(const Matrix& s, const Matrix& a);
/// min(Q1, Q2) per row.
Vector min_q(const MlpParams& q1, const MlpParams& q2, const Matrix& s, const Matrix& a);

struct TargetResult {
  Vector y;
  Vector bonus;  // per-row bonus term before alpha
};

/// y = r + gamma (1 - done) (min target Q(s', a') + alpha * bonus). The bonus
/// is sum_i w_i (log P(a_i|s,s') - log pi(a'_i|s')) for the empowerment bonus
/// (realized action for the inverse term, fresh a' for the policy term) and
/// -sum_i w_i log pi(a'_i|s') for the entropy bonus. `noise` drives a'.
TargetResult critic_target(const Batch& batch, const AgentState& agent, const Matrix& noise);

/// Gradient of mean (Q(x) - y)^2 for x = [s, a] rows.
MlpParams critic_gradient(const MlpParams& q, const Matrix& x, const Vector& y, double* loss = nullptr);

/// One Adam step per critic on its mean squared TD error. Returns the mean of
/// the two losses, or nullopt when the target was rejected.
std::optional<double> update_critics(const Batch& batch, AgentState& agent, const Matrix& noise,
                                     TargetResult* target_out = nullptr);

/// One Adam step on mean[alpha * bonus_loss - min Q(s, a~)], a~ reparameterized
/// from `noise`. The inverse-model term is evaluated on the realized
/// transition and carries no gradient.
std::optional<double> update_policy(const Batch& batch, AgentState& agent, const Matrix& noise);

/// Policy gradient without applying it, for tests.
MlpParams policy_gradient(const Batch& batch, const AgentState& agent, const Matrix& noise,
                          double* loss = nullptr);

void update_targets(AgentState& agent);

/// Stochastic action for acting; deterministic mean action when `greedy`.
Vector select_action(const AgentState& agent, const Vector& s, Rng& rng, bool greedy = false);

std::vector<CheckpointRecord> agent_checkpoint(const AgentState& agent);
void restore_checkpoint(AgentState& agent, const std::vector<CheckpointRecord>& records);

}  // namespace cip
