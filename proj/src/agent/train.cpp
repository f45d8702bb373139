#include "cip/agent/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cip/augment/augment.hpp"
#include "cip/envs/transition_io.hpp"

namespace cip {

std::uint64_t hash_matrices(const CausalMatrices& m, const Vector& omega) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v[i], sizeof(double));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  };
  mix(m.m_s_to_r);
  mix(m.m_a_to_r);
  mix(omega);
  return h;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Running {
  double sum = 0.0;
  std::int64_t n = 0;
  void add(double x) {
    sum += x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : kNaN; }
};

class Trainer {
 public:
  Trainer(const AgentConfig& config, const EnvSpec& env, const MetricsCallback& on_row)
      : env_(env, counter_hash(config.seed, 0xe5)), on_row_(on_row) {
    result_.agent = make_agent(config, env.d_s, env.d_a);
  }

  TrainResult run() {
    AgentState& ag = result_.agent;
    const AgentConfig& c = ag.config;
    start_ = std::chrono::steady_clock::now();
    Vector s = env_.reset();
    for (std::int64_t step = 0; step < c.total_steps; ++step) {
      try {
        s = act_and_store(s, step);
        maybe_refit(step);
        if (step + 1 >= c.warmup_steps && ag.replay.size() > 0) gradient_step();
      } catch (const Error& e) {
        throw Error("train: step " + std::to_string(step) + ": " + e.what());
      }
      ag.step = step + 1;
    }
    return std::move(result_);
  }

 private:
  Vector act_and_store(const Vector& s, std::int64_t step) {
    AgentState& ag = result_.agent;
    const AgentConfig& c = ag.config;
    Vector a(ag.d_a);
    if (step < c.warmup_steps) {
      for (Index i = 0; i < ag.d_a; ++i) a[i] = uniform(ag.rng, -1.0, 1.0);
    } else {
      a = select_action(ag, s, ag.rng);
    }
    const bool success = is_success(env_.spec(), s, a);
    StepResult res = env_.step(a);

    Transition t;
    t.s = s;
    t.a = a;
    t.r = res.reward;
    t.s_next = res.next_state;
    t.done = res.done && !c.time_limit_bootstrap;
    if (c.causal_discovery) ag.local.add(t);
    ag.replay.add(std::move(t));

    episode_return_ += res.reward;
    if (!res.done) return res.next_state;

    MetricsRow row;
    row.step = step + 1;
    row.episode = episode_++;
    row.episode_return = episode_return_;
    row.success = success;
    row.critic_loss = critic_.mean();
    row.policy_loss = policy_.mean();
    row.inverse_nll = inverse_.mean();
    row.empowerment_mean = bonus_.mean();
    row.synthetic_fraction = ag.replay.synthetic_fraction();
    row.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    result_.metrics.push_back(row);
    if (on_row_) on_row_(row);
    episode_return_ = 0.0;
    critic_ = policy_ = inverse_ = bonus_ = Running{};
    return env_.reset();
  }

  void maybe_refit(std::int64_t step) {
    AgentState& ag = result_.agent;
    const AgentConfig& c = ag.config;
    if (!c.causal_discovery) return;
    if (attempted_) {
      if (step + 1 - last_refit_ < c.causal_update_interval) return;
    } else if (static_cast<Index>(ag.local.size() - ag.local.synthetic_count()) < c.causal_sample_size) {
      return;
    }
    attempted_ = true;
    last_refit_ = step + 1;

    RefitEvent ev;
    ev.step = step + 1;
    CausalConfig cc;
    cc.theta = c.theta;
    cc.w_min = c.w_min;
    cc.causal_sample_size = c.causal_sample_size;
    const auto n = static_cast<std::size_t>(c.causal_sample_size);
    try {
      // Step 1: state mask, then counterfactual swaps into D_c and D.
      const CausalMatrices state_fit = fit_state_reward_mask(ag.local.recent(n), cc);
      SwapStats stats;
      const std::vector<Transition> added =
          augment_buffer(ag.local, state_fit, c.theta, c.augment_rate,
                         counter_hash(c.seed, 0xa6, static_cast<std::uint64_t>(refit_count_)),
                         next_source_, &stats);
      for (const auto& t : added) ag.replay.add(t);
      next_source_ = ag.local.total_added();
      ev.synthetic_added = added.size();
      ev.swap_skipped = stats.skipped;

      // Step 2: action weights on the augmented buffer.
      const ActionFit action_fit = fit_action_reward_weights(ag.local.recent(n), cc);

      CausalMatrices snapshot = state_fit;
      snapshot.m_a_to_r = action_fit.matrices.m_a_to_r;
      snapshot.m_a_to_r_std = action_fit.matrices.m_a_to_r_std;
      ag.matrices = std::move(snapshot);
      ag.weights = action_fit.weights;
      ag.uncontrollable = uncontrollable_set(ag.matrices, c.theta);
      ag.has_matrices = true;
      ag.matrices_hash = hash_matrices(ag.matrices, ag.weights.omega);
      ev.matrices_hash = ag.matrices_hash;
      ev.uncontrollable = ag.uncontrollable.indices;
      ev.omega = ag.weights.omega;
    } catch (const DegenerateInputError& e) {
      // Keep the previous snapshot; a constant column in a window is not fatal.
      ag.diagnostics.record("refit_skipped", e.what());
      ev.failed = true;
      ev.error = e.what();
      ev.matrices_hash = ag.matrices_hash;
    }
    ++refit_count_;
    result_.refits.push_back(std::move(ev));
  }

  void gradient_step() {
    AgentState& ag = result_.agent;
    const AgentConfig& c = ag.config;
    const auto positions = ag.replay.sample_positions(static_cast<std::size_t>(c.batch_size), ag.rng,
                                                     c.synthetic_sample_weight);
    const Batch batch = make_batch(ag.replay, positions);
    const Index n = batch.size();

    if (c.bonus == BonusKind::Empowerment) {
      if (auto nll = fit_inverse_dynamics(ag.inverse, batch.s, batch.a, batch.s_next, &ag.diagnostics)) {
        if (std::isfinite(*nll)) inverse_.add(*nll);
      }
    }
    const Matrix target_noise = standard_normal_matrix(ag.rng, n, ag.d_a);
    TargetResult target;
    if (auto loss = update_critics(batch, ag, target_noise, &target)) {
      critic_.add(*loss);
      bonus_.add(target.bonus.mean());
    }
    const Matrix policy_noise = standard_normal_matrix(ag.rng, n, ag.d_a);
    if (auto loss = update_policy(batch, ag, policy_noise)) policy_.add(*loss);

    ++ag.grad_steps;
    if (ag.grad_steps % c.target_update_interval == 0) update_targets(ag);
  }

  Environment env_;
  MetricsCallback on_row_;
  TrainResult result_;
  std::chrono::steady_clock::time_point start_;
  double episode_return_ = 0.0;
  std::int64_t episode_ = 0;
  Running critic_, policy_, inverse_, bonus_;
  bool attempted_ = false;
  std::int64_t last_refit_ = 0;
  std::int64_t refit_count_ = 0;
  std::uint64_t next_source_ = 0;
};

}  // namespace

TrainResult train(const AgentConfig& config, const EnvSpec& env, const MetricsCallback& on_row) {
  config.validate();
  validate_env_spec(env);
  Trainer trainer(config, env, on_row);
  return trainer.run();
}

TrainResult train_baseline_sac(const AgentConfig& config, const EnvSpec& env,
                               const MetricsCallback& on_row) {
  return train(baseline_sac_config(config), env, on_row);
}

std::string metrics_row_csv(const MetricsRow& r) {
  std::ostringstream ss;
  ss << r.step << ',' << r.episode << ',' << format_double(r.episode_return) << ','
     << (r.success ? 1 : 0) << ',' << format_double(r.critic_loss) << ','
     << format_double(r.policy_loss) << ',' << format_double(r.inverse_nll) << ','
     << format_double(r.empowerment_mean) << ',' << format_double(r.synthetic_fraction) << ','
     << format_double(r.wallclock_s);
  return ss.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_row_csv(r) << '\n';
}

namespace {

double parse_field(const std::string& f, std::int64_t line) {
  if (f == "nan") return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(f, &used);
    if (used != f.size()) throw std::invalid_argument(f);
    return v;
  } catch (const std::exception&) {
    throw ParseError("metrics: bad number '" + f + "'", line);
  }
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw ParseError("metrics: unexpected header", 1);
  std::vector<MetricsRow> rows;
  std::int64_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 10) throw ParseError("metrics: expected 10 fields", n);
    MetricsRow r;
    r.step = static_cast<std::int64_t>(parse_field(f[0], n));
    r.episode = static_cast<std::int64_t>(parse_field(f[1], n));
    r.episode_return = parse_field(f[2], n);
    r.success = parse_field(f[3], n) != 0.0;
    r.critic_loss = parse_field(f[4], n);
    r.policy_loss = parse_field(f[5], n);
    r.inverse_nll = parse_field(f[6], n);
    r.empowerment_mean = parse_field(f[7], n);
    r.synthetic_fraction = parse_field(f[8], n);
    r.wallclock_s = parse_field(f[9], n);
    rows.push_back(r);
  }
  return rows;
}

double return_auc(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return kNaN;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.episode_return;
  return sum / static_cast<double>(rows.size());
}

double final_return(const std::vector<MetricsRow>& rows, std::size_t k) {
  if (rows.empty()) return kNaN;
  const std::size_t m = std::min(k, rows.size());
  double sum = 0.0;
  for (std::size_t i = rows.size() - m; i < rows.size(); ++i) sum += rows[i].episode_return;
  return sum / static_cast<double>(m);
}

}  // namespace cip
