#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cip/envs/transition.hpp"
#include "cip/numkit/error.hpp"
#include "cip/numkit/linalg.hpp"

namespace cip {

enum class EnvKind { Reacher, DeadActuator, SemReward, Integrator, Teleport };

/// Static description of an environment, including the ground-truth reward
/// supports used by the oracle tests.
struct EnvSpec {
  std::string name;
  EnvKind kind = EnvKind::Reacher;
  Index d_s = 0;
  Index d_a = 0;
  double dt = 0.05;
  int episode_horizon = 200;
  Index n_distractors = 0;
  double distractor_ar_coeff = 0.9;
  std::vector<int> ground_truth_s_mask;
  std::vector<int> ground_truth_a_mask;

  // Point-mass kinematics (reacher and dead-actuator).
  double force = 100.0;
  double drag = 20.0;
  double max_speed = 5.0;
  double goal_low = 0.3;
  double goal_high = 1.0;
  double success_radius = 0.1;
  bool sparse_reward = false;
  Index n_live_actions = 0;

  // Linear reward env: r = reward_s . s + reward_a . a + U(-noise, noise).
  Vector reward_s;
  Vector reward_a;
  double reward_noise = 0.1;

  Index task_dims() const { return d_s - n_distractors; }
};

/// Throws ConfigError when masks or dimensions are inconsistent.
void validate_env_spec(const EnvSpec& spec);

/// [pos(2), vel(2), goal(2), distractors(k)], d_A = 2.
EnvSpec make_reacher(Index n_distractors = 8, bool sparse_reward = false);
/// Speed tracking with `n_live` effective actuators out of `d_a`:
/// [vel(2), target(2), distractors(k)].
EnvSpec make_dead_actuator(Index d_a = 6, Index n_live = 2, Index n_distractors = 0);
/// Independent AR(1) states with a linear noisy reward.
EnvSpec make_sem_reward(const Vector& reward_s, const Vector& reward_a, double reward_noise = 0.1);
/// One-step toy systems: s' = s + a (fully controllable) and s' independent of a.
EnvSpec make_integrator(Index dim = 2);
EnvSpec make_teleport(Index dim = 2);

/// Names: reacher, distractor_reacher, sparse_reacher, dead_actuator,
/// sem_reward, integrator, teleport.
EnvSpec make_env(const std::string& name);
std::vector<std::string> env_names();

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool done = false;
};

Vector env_reset(const EnvSpec& spec, Rng& rng);
Vector env_reset(const EnvSpec& spec, std::uint64_t seed);

/// Advances one step. `t` is the step index within the episode (0-based);
/// done is raised when t + 1 == episode_horizon. Out-of-range actions are
/// clamped and counted as "action_clamped".
StepResult env_step(const EnvSpec& spec, const Vector& state, const Vector& action, int t,
                    Rng& rng, Diagnostics* diagnostics = nullptr);

/// Noise-free reward of taking `action` in `state`. Equals the reward returned
/// by env_step for every env except sem_reward, whose reward noise is omitted.
double reward_of(const EnvSpec& spec, const Vector& state, const Vector& action);

/// Episode-level success: the final transition ended within success_radius.
bool is_success(const EnvSpec& spec, const Vector& state, const Vector& action);

/// Hand-written controller used to calibrate normalized scores.
Vector scripted_action(const EnvSpec& spec, const Vector& state);

struct ReferenceReturns {
  double random_return = 0.0;
  double oracle_return = 0.0;
  int episodes = 0;
};

/// Mean episode return of the uniform-random and scripted policies.
ReferenceReturns reference_returns(const EnvSpec& spec, int episodes, std::uint64_t seed);

struct MaskPair {
  std::vector<int> s_mask;
  std::vector<int> a_mask;
};

MaskPair ground_truth_masks(const EnvSpec& spec);

/// State indices with ground-truth mask 0.
std::vector<Index> ground_truth_uncontrollable(const EnvSpec& spec);

/// Stateful wrapper that tracks the episode clock and its own RNG.
class Environment {
 public:
  Environment(EnvSpec spec, std::uint64_t seed);

  const Vector& reset();
  StepResult step(const Vector& action);

  const EnvSpec& spec() const { return spec_; }
  const Vector& state() const { return state_; }
  int t() const { return t_; }
  Diagnostics& diagnostics() { return diagnostics_; }

 private:
  EnvSpec spec_;
  Rng rng_;
  Vector state_;
  int t_ = 0;
  Diagnostics diagnostics_;
};

/// Random-policy rollouts; returns exactly n transitions.
std::vector<Transition> collect_random(const EnvSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace cip
