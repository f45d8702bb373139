#include "cip/envs/envs.hpp"

#include <algorithm>
#include <cmath>

namespace cip {

namespace {

constexpr int kBurnIn = 100;

// Uniform innovation half-width giving unit stationary variance.
double innovation_halfwidth(double rho) { return std::sqrt(3.0 * (1.0 - rho * rho)); }

void step_distractors(const EnvSpec& spec, const Vector& state, Vector& next, Index first,
                      Index count, Rng& rng) {
  const double rho = spec.distractor_ar_coeff;
  const double c = innovation_halfwidth(rho);
  for (Index i = first; i < first + count; ++i) {
    next[i] = rho * state[i] + uniform(rng, -c, c);
  }
}

void init_distractors(const EnvSpec& spec, Vector& state, Index first, Index count, Rng& rng) {
  const double rho = spec.distractor_ar_coeff;
  const double c = innovation_halfwidth(rho);
  for (Index i = first; i < first + count; ++i) state[i] = 0.0;
  for (int k = 0; k < kBurnIn; ++k) {
    for (Index i = first; i < first + count; ++i) state[i] = rho * state[i] + uniform(rng, -c, c);
  }
}

Eigen::Vector2d reacher_next_pos(const EnvSpec& spec, const Vector& s) {
  Eigen::Vector2d pos = s.segment<2>(0) + spec.dt * s.segment<2>(2);
  return pos.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::Vector2d dead_next_vel(const EnvSpec& spec, const Vector& s, const Vector& a) {
  Eigen::Vector2d vel = s.segment<2>(0);
  Eigen::Vector2d drive = Eigen::Vector2d::Zero();
  for (Index i = 0; i < std::min<Index>(2, spec.n_live_actions); ++i) drive[i] = a[i];
  vel = vel + spec.dt * (spec.force * drive - spec.drag * vel);
  return vel.cwiseMax(-spec.max_speed).cwiseMin(spec.max_speed);
}

std::vector<int> ones(Index n) { return std::vector<int>(static_cast<std::size_t>(n), 1); }

std::vector<int> support(const Vector& v) {
  std::vector<int> m(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) m[static_cast<std::size_t>(i)] = v[i] != 0.0 ? 1 : 0;
  return m;
}

}  // namespace

void validate_env_spec(const EnvSpec& spec) {
  if (spec.d_s <= 0 || spec.d_a <= 0) throw ConfigError("env: dimensions must be positive", "d_s");
  if (static_cast<Index>(spec.ground_truth_s_mask.size()) != spec.d_s ||
      static_cast<Index>(spec.ground_truth_a_mask.size()) != spec.d_a) {
    throw ConfigError("env: ground-truth mask lengths must equal d_s and d_a", "ground_truth");
  }
  auto any = [](const std::vector<int>& m) {
    return std::any_of(m.begin(), m.end(), [](int x) { return x != 0; });
  };
  if (!any(spec.ground_truth_s_mask) || !any(spec.ground_truth_a_mask)) {
    throw ConfigError("env: ground-truth masks need a nonzero entry", "ground_truth");
  }
  if (spec.n_distractors < 0 || spec.n_distractors > spec.d_s) {
    throw ConfigError("env: bad distractor count", "n_distractors");
  }
  if (!(spec.distractor_ar_coeff > 0.0 && spec.distractor_ar_coeff < 1.0)) {
    throw ConfigError("env: distractor_ar_coeff must lie in (0,1)", "distractor_ar_coeff");
  }
  if (spec.episode_horizon <= 0) throw ConfigError("env: horizon must be positive", "episode_horizon");
}

EnvSpec make_reacher(Index n_distractors, bool sparse_reward) {
  EnvSpec spec;
  spec.kind = EnvKind::Reacher;
  spec.name = sparse_reward ? "sparse_reacher" : (n_distractors == 0 ? "reacher" : "distractor_reacher");
  spec.d_s = 6 + n_distractors;
  spec.d_a = 2;
  spec.n_distractors = n_distractors;
  spec.sparse_reward = sparse_reward;
  // Velocity has no direct reward edge but is dynamically coupled to position,
  // so it stays out of swaps.
  spec.ground_truth_s_mask = ones(spec.d_s);
  for (Index i = 6; i < spec.d_s; ++i) spec.ground_truth_s_mask[static_cast<std::size_t>(i)] = 0;
  spec.ground_truth_a_mask = ones(2);
  return spec;
}

EnvSpec make_dead_actuator(Index d_a, Index n_live, Index n_distractors) {
  if (n_live < 1 || n_live > 2 || n_live > d_a) {
    throw ConfigError("dead_actuator: n_live must be 1 or 2 and at most d_a", "n_live_actions");
  }
  EnvSpec spec;
  spec.kind = EnvKind::DeadActuator;
  spec.name = "dead_actuator";
  spec.d_s = 4 + n_distractors;
  spec.d_a = d_a;
  spec.n_distractors = n_distractors;
  spec.n_live_actions = n_live;
  spec.force = 20.0;
  spec.drag = 4.0;
  spec.max_speed = 2.0;
  spec.goal_low = 0.5;
  spec.goal_high = 1.5;
  spec.ground_truth_s_mask = ones(spec.d_s);
  for (Index i = 4; i < spec.d_s; ++i) spec.ground_truth_s_mask[static_cast<std::size_t>(i)] = 0;
  spec.ground_truth_a_mask.assign(static_cast<std::size_t>(d_a), 0);
  for (Index i = 0; i < n_live; ++i) spec.ground_truth_a_mask[static_cast<std::size_t>(i)] = 1;
  return spec;
}

EnvSpec make_sem_reward(const Vector& reward_s, const Vector& reward_a, double reward_noise) {
  EnvSpec spec;
  spec.kind = EnvKind::SemReward;
  spec.name = "sem_reward";
  spec.d_s = reward_s.size();
  spec.d_a = reward_a.size();
  spec.reward_s = reward_s;
  spec.reward_a = reward_a;
  spec.reward_noise = reward_noise;
  spec.ground_truth_s_mask = support(reward_s);
  spec.ground_truth_a_mask = support(reward_a);
  spec.n_distractors = static_cast<Index>(
      std::count(spec.ground_truth_s_mask.begin(), spec.ground_truth_s_mask.end(), 0));
  if (!(reward_noise > 0.0)) throw ConfigError("sem_reward: reward noise must be positive", "reward_noise");
  return spec;
}

EnvSpec make_integrator(Index dim) {
  EnvSpec spec;
  spec.kind = EnvKind::Integrator;
  spec.name = "integrator";
  spec.d_s = spec.d_a = dim;
  spec.episode_horizon = 1;
  spec.ground_truth_s_mask = ones(dim);
  spec.ground_truth_a_mask = ones(dim);
  return spec;
}

EnvSpec make_teleport(Index dim) {
  EnvSpec spec = make_integrator(dim);
  spec.kind = EnvKind::Teleport;
  spec.name = "teleport";
  return spec;
}

std::vector<std::string> env_names() {
  return {"reacher", "distractor_reacher", "sparse_reacher", "dead_actuator",
          "sem_reward", "integrator", "teleport"};
}

EnvSpec make_env(const std::string& name) {
  EnvSpec spec;
  if (name == "reacher") {
    spec = make_reacher(0);
  } else if (name == "distractor_reacher") {
    spec = make_reacher(8);
  } else if (name == "sparse_reacher") {
    spec = make_reacher(8, true);
  } else if (name == "dead_actuator") {
    spec = make_dead_actuator();
  } else if (name == "sem_reward") {
    Vector bs(4), ba(2);
    bs << 0.8, -0.6, 0.0, 0.0;
    ba << 0.7, 0.0;
    spec = make_sem_reward(bs, ba);
  } else if (name == "integrator") {
    spec = make_integrator();
  } else if (name == "teleport") {
    spec = make_teleport();
  } else {
    throw ConfigError("unknown environment '" + name + "'", "env");
  }
  validate_env_spec(spec);
  return spec;
}

Vector env_reset(const EnvSpec& spec, Rng& rng) {
  Vector s = Vector::Zero(spec.d_s);
  switch (spec.kind) {
    case EnvKind::Reacher:
      for (int i = 0; i < 2; ++i) s[i] = uniform(rng, -1.0, 1.0);
      for (int i = 4; i < 6; ++i) s[i] = uniform(rng, spec.goal_low, spec.goal_high);
      init_distractors(spec, s, 6, spec.n_distractors, rng);
      break;
    case EnvKind::DeadActuator:
      for (int i = 2; i < 4; ++i) s[i] = uniform(rng, spec.goal_low, spec.goal_high);
      init_distractors(spec, s, 4, spec.n_distractors, rng);
      break;
    case EnvKind::SemReward:
      init_distractors(spec, s, 0, spec.d_s, rng);
      break;
    case EnvKind::Integrator:
    case EnvKind::Teleport:
      for (Index i = 0; i < spec.d_s; ++i) s[i] = uniform(rng, -1.0, 1.0);
      break;
  }
  return s;
}

Vector env_reset(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return env_reset(spec, rng);
}

double reward_of(const EnvSpec& spec, const Vector& s, const Vector& a) {
  switch (spec.kind) {
    case EnvKind::Reacher: {
      const double dist = (reacher_next_pos(spec, s) - s.segment<2>(4)).norm();
      if (spec.sparse_reward) return dist < spec.success_radius ? 0.0 : -1.0;
      return -dist;
    }
    case EnvKind::DeadActuator:
      return -(dead_next_vel(spec, s, a) - s.segment<2>(2)).norm();
    case EnvKind::SemReward:
      return spec.reward_s.dot(s) + spec.reward_a.dot(a);
    case EnvKind::Integrator:
      return -(s + a).norm();
    case EnvKind::Teleport:
      return -(s - a).norm();
  }
  return 0.0;
}

bool is_success(const EnvSpec& spec, const Vector& s, const Vector& a) {
  switch (spec.kind) {
    case EnvKind::Reacher:
      return (reacher_next_pos(spec, s) - s.segment<2>(4)).norm() < spec.success_radius;
    case EnvKind::DeadActuator:
      return (dead_next_vel(spec, s, a) - s.segment<2>(2)).norm() < spec.success_radius;
    default:
      return reward_of(spec, s, a) > -spec.success_radius;
  }
}

StepResult env_step(const EnvSpec& spec, const Vector& state, const Vector& action, int t,
                    Rng& rng, Diagnostics* diagnostics) {
  if (state.size() != spec.d_s || action.size() != spec.d_a) {
    throw ConfigError("env_step: state or action length does not match the environment");
  }
  Vector a = action.cwiseMax(-1.0).cwiseMin(1.0);
  if (diagnostics && (a.array() != action.array()).any()) {
    diagnostics->record("action_clamped");
  }
  StepResult out;
  out.reward = reward_of(spec, state, a);
  out.next_state = state;
  Vector& n = out.next_state;
  switch (spec.kind) {
    case EnvKind::Reacher: {
      const Eigen::Vector2d vel = state.segment<2>(2);
      n.segment<2>(0) = reacher_next_pos(spec, state);
      n.segment<2>(2) = (vel + spec.dt * (spec.force * a.head<2>() - spec.drag * vel))
                            .cwiseMax(-spec.max_speed)
                            .cwiseMin(spec.max_speed);
      step_distractors(spec, state, n, 6, spec.n_distractors, rng);
      break;
    }
    case EnvKind::DeadActuator:
      n.segment<2>(0) = dead_next_vel(spec, state, a);
      step_distractors(spec, state, n, 4, spec.n_distractors, rng);
      break;
    case EnvKind::SemReward:
      step_distractors(spec, state, n, 0, spec.d_s, rng);
      out.reward += uniform(rng, -spec.reward_noise, spec.reward_noise);
      break;
    case EnvKind::Integrator:
      n = state + a;
      break;
    case EnvKind::Teleport:
      for (Index i = 0; i < spec.d_s; ++i) n[i] = uniform(rng, -1.0, 1.0);
      break;
  }
  out.done = t + 1 >= spec.episode_horizon;
  return out;
}

Vector scripted_action(const EnvSpec& spec, const Vector& s) {
  Vector a = Vector::Zero(spec.d_a);
  switch (spec.kind) {
    case EnvKind::Reacher: {
      // With drag*dt == 1 the next velocity is force*dt*a, so this lands the
      // position two steps ahead on the goal.
      const Eigen::Vector2d pos_next = reacher_next_pos(spec, s);
      const double gain = spec.dt * spec.dt * spec.force;
      a.head<2>() = (s.segment<2>(4) - pos_next) / gain;
      break;
    }
    case EnvKind::DeadActuator: {
      const Eigen::Vector2d vel = s.segment<2>(0);
      const Eigen::Vector2d want = (s.segment<2>(2) - (1.0 - spec.dt * spec.drag) * vel) /
                                   (spec.dt * spec.force);
      for (Index i = 0; i < std::min<Index>(2, spec.n_live_actions); ++i) a[i] = want[i];
      break;
    }
    case EnvKind::SemReward:
      for (Index i = 0; i < spec.d_a; ++i) a[i] = spec.reward_a[i] > 0 ? 1.0 : (spec.reward_a[i] < 0 ? -1.0 : 0.0);
      break;
    case EnvKind::Integrator:
      a = -s;
      break;
    case EnvKind::Teleport:
      a = s;
      break;
  }
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

ReferenceReturns reference_returns(const EnvSpec& spec, int episodes, std::uint64_t seed) {
  ReferenceReturns ref;
  ref.episodes = episodes;
  if (episodes <= 0) return ref;
  for (int policy = 0; policy < 2; ++policy) {
    double total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
      Rng env_rng(counter_hash(seed, static_cast<std::uint64_t>(ep), 1));
      Rng act_rng(counter_hash(seed, static_cast<std::uint64_t>(ep), 2));
      Vector s = env_reset(spec, env_rng);
      for (int t = 0; t < spec.episode_horizon; ++t) {
        Vector a(spec.d_a);
        if (policy == 0) {
          for (Index i = 0; i < spec.d_a; ++i) a[i] = uniform(act_rng, -1.0, 1.0);
        } else {
          a = scripted_action(spec, s);
        }
        StepResult step = env_step(spec, s, a, t, env_rng);
        total += step.reward;
        s = std::move(step.next_state);
      }
    }
    (policy == 0 ? ref.random_return : ref.oracle_return) = total / episodes;
  }
  return ref;
}

MaskPair ground_truth_masks(const EnvSpec& spec) {
  return {spec.ground_truth_s_mask, spec.ground_truth_a_mask};
}

std::vector<Index> ground_truth_uncontrollable(const EnvSpec& spec) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < spec.ground_truth_s_mask.size(); ++i) {
    if (spec.ground_truth_s_mask[i] == 0) out.push_back(static_cast<Index>(i));
  }
  return out;
}

Environment::Environment(EnvSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {
  validate_env_spec(spec_);
  reset();
}

const Vector& Environment::reset() {
  state_ = env_reset(spec_, rng_);
  t_ = 0;
  return state_;
}

StepResult Environment::step(const Vector& action) {
  StepResult out = env_step(spec_, state_, action, t_, rng_, &diagnostics_);
  state_ = out.next_state;
  ++t_;
  return out;
}

std::vector<Transition> collect_random(const EnvSpec& spec, std::size_t n, std::uint64_t seed) {
  Environment env(spec, counter_hash(seed, 0, 11));
  Rng act_rng(counter_hash(seed, 0, 12));
  std::vector<Transition> out;
  out.reserve(n);
  while (out.size() < n) {
    Vector a(spec.d_a);
    for (Index i = 0; i < spec.d_a; ++i) a[i] = uniform(act_rng, -1.0, 1.0);
    Transition tr;
    tr.s = env.state();
    StepResult step = env.step(a);
    tr.a = std::move(a);
    tr.r = step.reward;
    tr.s_next = step.next_state;
    tr.done = step.done;
    out.push_back(std::move(tr));
    if (step.done) env.reset();
  }
  return out;
}

}  // namespace cip
