#include "cip/empower/empower.hpp"

#include <cmath>

namespace cip {

InverseDynamicsModel make_inverse_model(Index d_s, Index d_a, const std::vector<Index>& hidden,
                                        Rng& rng, double lr) {
  InverseDynamicsModel model;
  model.net = make_gaussian_mlp(2 * d_s, d_a, hidden, rng);
  model.adam = AdamState::for_params(model.net.net);
  model.lr = lr;
  return model;
}

Matrix inverse_inputs(const Matrix& s, const Matrix& s_next) {
  if (s.rows() != s_next.rows() || s.cols() != s_next.cols()) {
    throw ConfigError("inverse model: s and s_next shapes differ");
  }
  Matrix x(s.rows(), 2 * s.cols());
  x.leftCols(s.cols()) = s;
  x.rightCols(s.cols()) = s_next;
  return x;
}

MlpParams inverse_nll_gradient(const InverseDynamicsModel& model, const Matrix& s, const Matrix& a,
                               const Matrix& s_next, double* nll_out) {
  if (a.cols() != model.action_dim()) throw ConfigError("inverse model: action width mismatch");
  const GaussianMlpEval ev = gaussian_mlp_eval(model.net, inverse_inputs(s, s_next));
  const Matrix raw = actions_to_raw(a, model.net.head);
  const double count = static_cast<double>(a.size());

  const Matrix lp = head_raw_log_prob(ev.head, raw);
  if (nll_out) *nll_out = -lp.sum() / count;
  // d(nll)/d(mean) = -z/sigma, d(nll)/d(log_std) = 1 - z^2, averaged.
  const Eigen::ArrayXXd inv_sigma = (-ev.head.log_std.array()).exp();
  const Eigen::ArrayXXd z = (raw.array() - ev.head.mean.array()) * inv_sigma;
  const Matrix d_mean = (-z * inv_sigma / count).matrix();
  const Matrix d_log_std = ((1.0 - z.square()) / count).matrix();
  return mlp_backward(model.net.net, ev.tape, join_gaussian_gradient(ev.head, d_mean, d_log_std));
}

std::optional<double> fit_inverse_dynamics(InverseDynamicsModel& model, const Matrix& s,
                                           const Matrix& a, const Matrix& s_next,
                                           Diagnostics* diagnostics) {
  if (s.rows() == 0) return std::nullopt;
  double nll = 0.0;
  const MlpParams grads = inverse_nll_gradient(model, s, a, s_next, &nll);
  if (!std::isfinite(nll)) {
    if (diagnostics) diagnostics->record("inverse_rejected", "non-finite NLL");
    return nll;
  }
  if (!adam_step(model.net.net, grads, model.adam, model.lr, diagnostics) && diagnostics) {
    diagnostics->record("inverse_rejected", "non-finite gradient");
  }
  return nll;
}

std::optional<double> fit_inverse_dynamics(InverseDynamicsModel& model,
                                           const std::vector<Transition>& batch,
                                           Diagnostics* diagnostics) {
  if (batch.empty()) return std::nullopt;
  const Index n = static_cast<Index>(batch.size());
  Matrix s(n, batch.front().s.size()), a(n, batch.front().a.size()), sn(n, batch.front().s.size());
  for (Index i = 0; i < n; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    s.row(i) = t.s.transpose();
    a.row(i) = t.a.transpose();
    sn.row(i) = t.s_next.transpose();
  }
  return fit_inverse_dynamics(model, s, a, sn, diagnostics);
}

Matrix inverse_log_prob(const InverseDynamicsModel& model, const Matrix& s, const Matrix& s_next,
                        const Matrix& raw) {
  const GaussianMlpEval ev = gaussian_mlp_eval(model.net, inverse_inputs(s, s_next));
  return head_raw_log_prob(ev.head, raw) - squash_log_jacobian(raw);
}

Matrix policy_log_prob(const GaussianMlp& policy, const Matrix& s, const Matrix& raw) {
  const GaussianMlpEval ev = gaussian_mlp_eval(policy, s);
  return head_raw_log_prob(ev.head, raw) - squash_log_jacobian(raw);
}

namespace {

Matrix row(const Vector& v) { return v.transpose(); }

void check_weights(const ActionWeights& w, Index d_a) {
  if (w.omega.size() != d_a) throw ConfigError("action weights length does not match d_A");
}

}  // namespace

WeightedEntropy weighted_entropy_policy(const Vector& s, const GaussianMlp& policy,
                                        const ActionWeights& w, const Vector& noise, bool squash) {
  check_weights(w, policy.action_dim());
  const Vector out = mlp_forward(policy.net, s);
  const Index d = policy.action_dim();
  const GaussianHeadOutput h = gaussian_head_sample(out.head(d), out.tail(d), noise, policy.head);
  WeightedEntropy e;
  e.per_dim = -w.omega.cwiseProduct(squash ? h.per_dim_log_prob : h.per_dim_raw_log_prob);
  e.value = e.per_dim.sum();
  return e;
}

WeightedEntropy weighted_entropy_inverse(const Vector& s, const Vector& s_next, const Vector& a,
                                         const InverseDynamicsModel& model, const ActionWeights& w) {
  check_weights(w, model.action_dim());
  const Matrix raw = actions_to_raw(row(a), model.net.head);
  const Vector lp = inverse_log_prob(model, row(s), row(s_next), raw).row(0).transpose();
  WeightedEntropy e;
  e.per_dim = -w.omega.cwiseProduct(lp);
  e.value = e.per_dim.sum();
  return e;
}

EmpowermentEstimate empowerment_batch_mean(const Matrix& s, const Matrix& a, const Matrix& s_next,
                                           const GaussianMlp& policy,
                                           const InverseDynamicsModel& model,
                                           const ActionWeights& w) {
  check_weights(w, policy.action_dim());
  check_weights(w, model.action_dim());
  EmpowermentEstimate e;
  const Index n = s.rows();
  if (n == 0) {
    e.per_dim = Vector::Zero(w.omega.size());
    return e;
  }
  const Matrix raw = actions_to_raw(a, policy.head);
  const Matrix lp_pol = policy_log_prob(policy, s, raw);
  const Matrix lp_inv = inverse_log_prob(model, s, s_next, raw);
  const Vector mean_pol = lp_pol.colwise().mean().transpose();
  const Vector mean_inv = lp_inv.colwise().mean().transpose();
  e.h_policy = -w.omega.dot(mean_pol);
  e.h_inverse = -w.omega.dot(mean_inv);
  e.value = e.h_policy - e.h_inverse;
  e.per_dim = w.omega.cwiseProduct(mean_inv - mean_pol);
  return e;
}

EmpowermentEstimate empowerment_term(const Vector& s, const Vector& a, const Vector& s_next,
                                     const GaussianMlp& policy, const InverseDynamicsModel& model,
                                     const ActionWeights& w) {
  return empowerment_batch_mean(row(s), row(a), row(s_next), policy, model, w);
}

}  // namespace cip
