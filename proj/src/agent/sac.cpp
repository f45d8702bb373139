#include "cip/agent/sac.hpp"

#include <cmath>

namespace cip {

const Vector& AgentState::omega() const {
  if (config.use_action_weights && has_matrices && weights.omega.size() == d_a) return weights.omega;
  return unit_omega;
}

AgentState make_agent(const AgentConfig& config, Index d_s, Index d_a) {
  config.validate();
  AgentState agent;
  agent.config = config;
  agent.d_s = d_s;
  agent.d_a = d_a;
  agent.unit_omega = Vector::Ones(d_a);

  Rng init(counter_hash(config.seed, 0x1417));
  agent.policy = make_gaussian_mlp(d_s, d_a, config.hidden, init);
  agent.policy_adam = AdamState::for_params(agent.policy.net);
  agent.q1 = mlp_init({d_s + d_a, config.hidden, 1}, init);
  agent.q2 = mlp_init({d_s + d_a, config.hidden, 1}, init);
  agent.q1_target = agent.q1;
  agent.q2_target = agent.q2;
  agent.q1_adam = AdamState::for_params(agent.q1);
  agent.q2_adam = AdamState::for_params(agent.q2);
  agent.inverse = make_inverse_model(d_s, d_a, config.hidden, init, config.inverse_lr);

  agent.replay = ReplayBuffer(static_cast<std::size_t>(config.replay_capacity));
  agent.local = ReplayBuffer(config.causal_discovery ? config.local_capacity() : 1);
  agent.rng.seed(counter_hash(config.seed, 0x5ac));
  return agent;
}

Matrix critic_inputs(const Matrix& s, const Matrix& a) {
  Matrix x(s.rows(), s.cols() + a.cols());
  x.leftCols(s.cols()) = s;
  x.rightCols(a.cols()) = a;
  return x;
}

Vector min_q(const MlpParams& q1, const MlpParams& q2, const Matrix& s, const Matrix& a) {
  const Matrix x = critic_inputs(s, a);
  return mlp_forward_batch(q1, x).col(0).cwiseMin(mlp_forward_batch(q2, x).col(0));
}

namespace {

struct PolicyDraw {
  GaussianMlpEval eval;
  Matrix noise;
  Matrix raw;
  Matrix action;
  Matrix log_prob;  // squashed-space, per dim
};

PolicyDraw draw_policy(const GaussianMlp& policy, const Matrix& s, const Matrix& noise) {
  PolicyDraw d;
  d.eval = gaussian_mlp_eval(policy, s);
  if (noise.rows() != s.rows() || noise.cols() != policy.action_dim()) {
    throw ConfigError("policy noise shape does not match the batch");
  }
  d.noise = noise;
  d.raw = (d.eval.head.mean.array() + d.eval.head.log_std.array().exp() * noise.array()).matrix();
  d.action = d.raw.array().tanh().matrix();
  d.log_prob = head_raw_log_prob(d.eval.head, d.raw) - squash_log_jacobian(d.raw);
  return d;
}

}  // namespace

TargetResult critic_target(const Batch& batch, const AgentState& agent, const Matrix& noise) {
  const AgentConfig& c = agent.config;
  const Vector& w = agent.omega();
  const PolicyDraw next = draw_policy(agent.policy, batch.s_next, noise);
  const Vector q_next = min_q(agent.q1_target, agent.q2_target, batch.s_next, next.action);

  TargetResult out;
  if (c.bonus == BonusKind::Empowerment) {
    const Matrix raw = actions_to_raw(batch.a, agent.inverse.net.head);
    const Matrix lp_inv = inverse_log_prob(agent.inverse, batch.s, batch.s_next, raw);
    out.bonus = (lp_inv - next.log_prob) * w;
  } else {
    out.bonus = -(next.log_prob * w);
  }
  const Vector not_done = (1.0 - batch.done.array()).matrix();
  out.y = (batch.r.array() +
           c.gamma * not_done.array() * (q_next.array() + c.alpha * out.bonus.array()))
              .matrix();
  return out;
}

MlpParams critic_gradient(const MlpParams& q, const Matrix& x, const Vector& y, double* loss) {
  const MlpTape tape = mlp_forward_tape(q, x);
  const Vector err = tape.output().col(0) - y;
  const double n = static_cast<double>(y.size());
  if (loss) *loss = err.squaredNorm() / n;
  return mlp_backward(q, tape, (2.0 / n) * err);
}

std::optional<double> update_critics(const Batch& batch, AgentState& agent, const Matrix& noise,
                                     TargetResult* target_out) {
  TargetResult target = critic_target(batch, agent, noise);
  if (!target.y.allFinite()) {
    agent.diagnostics.record("critic_target_rejected", "non-finite target");
    return std::nullopt;
  }
  const Matrix x = critic_inputs(batch.s, batch.a);
  double total = 0.0;
  for (int k = 0; k < 2; ++k) {
    MlpParams& q = k == 0 ? agent.q1 : agent.q2;
    AdamState& adam = k == 0 ? agent.q1_adam : agent.q2_adam;
    double loss = 0.0;
    const MlpParams grads = critic_gradient(q, x, target.y, &loss);
    total += loss;
    adam_step(q, grads, adam, agent.config.lr, &agent.diagnostics);
  }
  if (target_out) *target_out = std::move(target);
  return total / 2.0;
}

MlpParams policy_gradient(const Batch& batch, const AgentState& agent, const Matrix& noise,
                          double* loss) {
  const AgentConfig& c = agent.config;
  const Index n = batch.size();
  const Index da = agent.d_a;
  const Vector& w = agent.omega();
  const PolicyDraw d = draw_policy(agent.policy, batch.s, noise);

  // Critic value and d/da of min(Q1, Q2) at the sampled action.
  const Matrix x = critic_inputs(batch.s, d.action);
  const MlpTape t1 = mlp_forward_tape(agent.q1, x);
  const MlpTape t2 = mlp_forward_tape(agent.q2, x);
  const Vector q1 = t1.output().col(0);
  const Vector q2 = t2.output().col(0);
  const Vector pick1 = (q1.array() <= q2.array()).cast<double>().matrix();
  const Vector pick2 = (1.0 - pick1.array()).matrix();
  Matrix g1, g2;
  mlp_backward(agent.q1, t1, pick1, &g1);
  mlp_backward(agent.q2, t2, pick2, &g2);
  const Matrix dq_da = (g1 + g2).rightCols(da);
  const Vector q_min = q1.cwiseMin(q2);

  const Eigen::ArrayXXd sigma = d.eval.head.log_std.array().exp();
  const Eigen::ArrayXXd a = d.action.array();
  const Eigen::RowVectorXd aw = (c.alpha * w).transpose();  // alpha * omega per dim

  // g_x: derivative of the per-row loss w.r.t. the raw sample. Only the squash
  // correction of log pi depends on the sample path; the inverse-model term is
  // a constant of the realized transition.
  Eigen::ArrayXXd g_bonus = 2.0 * a;
  Vector bonus_loss = d.log_prob * w;
  if (c.bonus == BonusKind::Empowerment) {
    const Matrix raw = actions_to_raw(batch.a, agent.inverse.net.head);
    bonus_loss -= inverse_log_prob(agent.inverse, batch.s, batch.s_next, raw) * w;
  }
  for (Index j = 0; j < da; ++j) g_bonus.col(j) *= aw[j];
  const Eigen::ArrayXXd g_x = g_bonus - dq_da.array() * (1.0 - a.square());

  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix d_mean = (g_x * inv_n).matrix();
  Eigen::ArrayXXd d_ls = g_x * sigma * d.noise.array();
  for (Index j = 0; j < da; ++j) d_ls.col(j) -= aw[j];
  const Matrix d_log_std = (d_ls * inv_n).matrix();

  if (loss) *loss = (c.alpha * bonus_loss - q_min).mean();
  const Matrix up = join_gaussian_gradient(d.eval.head, d_mean, d_log_std);
  return mlp_backward(agent.policy.net, d.eval.tape, up);
}

std::optional<double> update_policy(const Batch& batch, AgentState& agent, const Matrix& noise) {
  double loss = 0.0;
  const MlpParams grads = policy_gradient(batch, agent, noise, &loss);
  if (!std::isfinite(loss) ||
      !adam_step(agent.policy.net, grads, agent.policy_adam, agent.config.lr, &agent.diagnostics)) {
    agent.diagnostics.record("policy_rejected");
    return std::nullopt;
  }
  return loss;
}

void update_targets(AgentState& agent) {
  polyak_update(agent.q1_target, agent.q1, agent.config.tau);
  polyak_update(agent.q2_target, agent.q2, agent.config.tau);
}

Vector select_action(const AgentState& agent, const Vector& s, Rng& rng, bool greedy) {
  const Vector out = mlp_forward(agent.policy.net, s);
  const Index d = agent.d_a;
  if (greedy) return out.head(d).array().tanh().matrix();
  const Vector noise = standard_normal_vector(rng, d);
  return gaussian_head_sample(out.head(d), out.tail(d), noise, agent.policy.head).action;
}

std::vector<CheckpointRecord> agent_checkpoint(const AgentState& agent) {
  std::vector<CheckpointRecord> out;
  append_mlp_records(out, "policy", agent.policy.net);
  append_mlp_records(out, "critic1", agent.q1);
  append_mlp_records(out, "critic2", agent.q2);
  append_mlp_records(out, "critic1_target", agent.q1_target);
  append_mlp_records(out, "critic2_target", agent.q2_target);
  append_mlp_records(out, "inverse_dynamics", agent.inverse.net.net);
  return out;
}

void restore_checkpoint(AgentState& agent, const std::vector<CheckpointRecord>& records) {
  auto load = [&](MlpParams& dst, const char* name) {
    MlpParams p = extract_mlp(records, name);
    require_same_shape(dst, p, name);
    dst = std::move(p);
  };
  load(agent.policy.net, "policy");
  load(agent.q1, "critic1");
  load(agent.q2, "critic2");
  load(agent.q1_target, "critic1_target");
  load(agent.q2_target, "critic2_target");
  load(agent.inverse.net.net, "inverse_dynamics");
}

}  // namespace cip
