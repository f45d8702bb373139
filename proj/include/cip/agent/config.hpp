#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cip/numkit/linalg.hpp"

namespace cip {

enum class BonusKind { Empowerment, Entropy };

/// Every field maps one-to-one to a key of the JSON config document.
struct AgentConfig {
  double gamma = 0.99;
  double lr = 3e-4;
  Index batch_size = 256;
  double alpha = 0.2;
  double tau = 0.005;
  Index causal_update_interval = 1000;
  Index causal_sample_size = 10000;
  double theta = 0.05;
  double augment_rate = 0.5;
  std::int64_t total_steps = 100000;
  std::uint64_t seed = 0;

  std::vector<Index> hidden = {64, 64};
  std::int64_t warmup_steps = 1000;
  Index target_update_interval = 2;
  Index replay_capacity = 1000000;
  double w_min = 0.05;
  BonusKind bonus = BonusKind::Empowerment;
  bool causal_discovery = true;
  bool use_action_weights = true;
  /// Episodes only end on the time limit, so by default the critic keeps
  /// bootstrapping through the final step.
  bool time_limit_bootstrap = true;
  double inverse_lr = 3e-4;
  // Sampling weight of synthetic relative to real entries in D, in [0, 1].
  double synthetic_sample_weight = 1.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Local causal buffer capacity: ceil(causal_sample_size * (1 + augment_rate)).
  std::size_t local_capacity() const;
};

/// SAC with weighted entropy disabled, no discovery and no augmentation.
AgentConfig baseline_sac_config(AgentConfig config);

/// Presets used by the comparisons: "cip", "sac", "no_aug", "no_emp".
AgentConfig variant_config(AgentConfig base, const std::string& variant);

std::string config_to_json(const AgentConfig& config);
/// Unknown keys and wrong types are rejected with the field name.
AgentConfig config_from_json(const std::string& text);
AgentConfig load_config(const std::string& path);

const char* bonus_name(BonusKind b);

}  // namespace cip
