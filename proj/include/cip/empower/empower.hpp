#pragma once

#include <optional>
#include <vector>

#include "cip/causal/reward_matrices.hpp"
#include "cip/envs/transition.hpp"
#include "cip/numkit/adam.hpp"
#include "cip/numkit/error.hpp"
#include "cip/numkit/gaussian_head.hpp"

namespace cip {

/// Gaussian density model of the action given (s, s'). Inputs are [s, s'];
/// outputs [mean | log_std] over the raw (pre-tanh) action.
struct InverseDynamicsModel {
  GaussianMlp net;
  AdamState adam;
  double lr = 3e-4;

  Index action_dim() const { return net.action_dim(); }
};

InverseDynamicsModel make_inverse_model(Index d_s, Index d_a, const std::vector<Index>& hidden,
                                        Rng& rng, double lr = 3e-4);

Matrix inverse_inputs(const Matrix& s, const Matrix& s_next);

/// Gradient of the mean per-dimension Gaussian NLL of atanh(a) given [s, s'].
MlpParams inverse_nll_gradient(const InverseDynamicsModel& model, const Matrix& s, const Matrix& a,
                               const Matrix& s_next, double* nll = nullptr);

/// One Adam step on the mean per-dimension Gaussian NLL of atanh(a). Returns
/// the pre-update NLL, or nullopt for an empty batch. A non-finite NLL leaves
/// the model untouched and records "inverse_rejected".
std::optional<double> fit_inverse_dynamics(InverseDynamicsModel& model, const Matrix& s,
                                           const Matrix& a, const Matrix& s_next,
                                           Diagnostics* diagnostics = nullptr);
std::optional<double> fit_inverse_dynamics(InverseDynamicsModel& model,
                                           const std::vector<Transition>& batch,
                                           Diagnostics* diagnostics = nullptr);

/// Per-dimension log density of the squashed actions whose raw preimages are
/// `raw`, under the inverse model and the policy respectively.
Matrix inverse_log_prob(const InverseDynamicsModel& model, const Matrix& s, const Matrix& s_next,
                        const Matrix& raw);
Matrix policy_log_prob(const GaussianMlp& policy, const Matrix& s, const Matrix& raw);

struct WeightedEntropy {
  double value = 0.0;
  Vector per_dim;  // -omega_i * log p_i
};

/// Single-sample estimate -sum_i omega_i log pi_i(a_i|s) with a drawn from
/// `noise`. With `squash` false the raw Gaussian density is used.
WeightedEntropy weighted_entropy_policy(const Vector& s, const GaussianMlp& policy,
                                        const ActionWeights& w, const Vector& noise,
                                        bool squash = true);

/// -sum_i omega_i log P(a_i | s, s') at the taken (squashed) action.
WeightedEntropy weighted_entropy_inverse(const Vector& s, const Vector& s_next, const Vector& a,
                                         const InverseDynamicsModel& model, const ActionWeights& w);

struct EmpowermentEstimate {
  double value = 0.0;  // h_policy - h_inverse
  double h_policy = 0.0;
  double h_inverse = 0.0;
  Vector per_dim;  // omega_i (log P_i - log pi_i)
};

/// sum_i omega_i (log P(a_i|s,s') - log pi(a_i|s)) at the given action.
EmpowermentEstimate empowerment_term(const Vector& s, const Vector& a, const Vector& s_next,
                                     const GaussianMlp& policy, const InverseDynamicsModel& model,
                                     const ActionWeights& w);

/// Batch mean of empowerment_term over rows.
EmpowermentEstimate empowerment_batch_mean(const Matrix& s, const Matrix& a, const Matrix& s_next,
                                           const GaussianMlp& policy,
                                           const InverseDynamicsModel& model,
                                           const ActionWeights& w);

}  // namespace cip
