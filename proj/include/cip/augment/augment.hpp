#pragma once

#include <cstdint>
#include <vector>

#include "cip/agent/replay.hpp"
#include "cip/causal/reward_matrices.hpp"
#include "cip/envs/transition.hpp"

namespace cip {

struct SwapPlan {
  std::size_t source_index = 0;
  std::size_t partner_index = 0;
  std::vector<Index> shared_dims;
};

/// Source transition with `dims` of s and s_next taken from `t_hat`. Action,
/// reward and done come from `t`; the result is flagged synthetic.
Transition counterfactual_swap(const Transition& t, const Transition& t_hat,
                               const std::vector<Index>& dims);

struct SwapStats {
  std::size_t eligible = 0;  // real transitions that could act as sources
  std::size_t selected = 0;  // sources drawn at the requested rate
  std::size_t skipped = 0;   // selected sources with no partner after retries
};

inline constexpr int kPartnerRetries = 8;

/// Picks floor(rate * eligible) real sources among positions in
/// [first_source, batch.size()) and pairs each with a uniformly drawn real
/// partner anywhere in the batch whose uncontrollable set intersects its own.
/// `u_sets` holds one set per transition or a single set shared by all.
/// Draws are keyed by (seed, source index) so the plan does not depend on
/// evaluation order.
std::vector<SwapPlan> plan_swaps(const std::vector<Transition>& batch,
                                 const std::vector<UncontrollableSet>& u_sets, double rate,
                                 std::uint64_t seed, std::size_t first_source = 0,
                                 SwapStats* stats = nullptr);

std::vector<Transition> materialize_swaps(const std::vector<Transition>& batch,
                                          const std::vector<SwapPlan>& plans);

/// Uncontrollable set from `matrices` at `theta`, swaps over the buffer's real
/// entries with logical index >= `first_logical_source`, and appends the
/// results (flagged synthetic). Returns the synthetic transitions added.
std::vector<Transition> augment_buffer(ReplayBuffer& local_buffer, const CausalMatrices& matrices,
                                       double theta, double rate, std::uint64_t seed,
                                       std::uint64_t first_logical_source = 0,
                                       SwapStats* stats = nullptr);

}  // namespace cip
