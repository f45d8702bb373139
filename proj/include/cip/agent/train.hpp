#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cip/agent/config.hpp"
#include "cip/agent/sac.hpp"
#include "cip/envs/envs.hpp"

namespace cip {

/// One row per finished episode. Loss columns average the gradient steps taken
/// during the episode and are NaN when there were none.
struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double episode_return = 0.0;
  bool success = false;
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double inverse_nll = 0.0;
  double empowerment_mean = 0.0;
  double synthetic_fraction = 0.0;
  double wallclock_s = 0.0;
};

struct RefitEvent {
  std::int64_t step = 0;
  std::uint64_t matrices_hash = 0;
  std::vector<Index> uncontrollable;
  Vector omega;
  std::size_t synthetic_added = 0;
  std::size_t swap_skipped = 0;
  bool failed = false;
  std::string error;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<RefitEvent> refits;
  AgentState agent;
};

using MetricsCallback = std::function<void(const MetricsRow&)>;

/// The full loop: act (uniform warmup first), store in D and D_c, refit the
/// causal snapshot on schedule (state mask, augmentation, action weights), then
/// one gradient step per environment step.
TrainResult train(const AgentConfig& config, const EnvSpec& env, const MetricsCallback& on_row = {});

/// Same loop with the entropy bonus, unit weights and no discovery.
TrainResult train_baseline_sac(const AgentConfig& config, const EnvSpec& env,
                               const MetricsCallback& on_row = {});

/// FNV-1a over the coefficient bytes of a snapshot.
std::uint64_t hash_matrices(const CausalMatrices& m, const Vector& omega);

inline constexpr const char* kMetricsHeader =
    "step,episode,return,success,critic_loss,policy_loss,inverse_nll,empowerment_mean,"
    "synthetic_fraction,wallclock_s";

std::string metrics_row_csv(const MetricsRow& row);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
/// Strict reader for files written by write_metrics_csv.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// Mean episode return over training, the area-under-curve summary.
double return_auc(const std::vector<MetricsRow>& rows);
/// Mean return of the last `k` episodes.
double final_return(const std::vector<MetricsRow>& rows, std::size_t k = 20);

}  // namespace cip
