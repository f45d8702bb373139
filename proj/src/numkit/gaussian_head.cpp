#include "cip/numkit/gaussian_head.hpp"

#include <algorithm>
#include <cmath>

#include "cip/numkit/error.hpp"

namespace cip {

double log_one_minus_tanh_sq(double x) {
  // 1 - tanh^2 x = 4 / (e^x + e^-x)^2
  const double ax = std::abs(x);
  return 2.0 * (std::log(2.0) - ax - std::log1p(std::exp(-2.0 * ax)));
}

double squashed_to_raw(double action, const GaussianHeadConfig& config) {
  const double c = config.atanh_clamp;
  return std::atanh(std::clamp(action, -c, c));
}

GaussianHeadOutput gaussian_head_sample(const Vector& mean, const Vector& log_std,
                                        const Vector& noise, const GaussianHeadConfig& config) {
  if (mean.size() != log_std.size() || mean.size() != noise.size()) {
    throw ConfigError("gaussian_head_sample: mean, log_std and noise lengths differ");
  }
  const Index n = mean.size();
  GaussianHeadOutput out;
  out.mean = mean;
  out.log_std = log_std.cwiseMax(config.log_std_min).cwiseMin(config.log_std_max);
  out.raw_sample.resize(n);
  out.action.resize(n);
  out.per_dim_log_prob.resize(n);
  out.per_dim_raw_log_prob.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double x = mean[i] + std::exp(out.log_std[i]) * noise[i];
    out.raw_sample[i] = x;
    out.action[i] = std::tanh(x);
    out.per_dim_raw_log_prob[i] = -0.5 * noise[i] * noise[i] - out.log_std[i] - kHalfLog2Pi;
    out.per_dim_log_prob[i] = out.per_dim_raw_log_prob[i] - log_one_minus_tanh_sq(x);
  }
  return out;
}

GaussianBatch split_gaussian_output(const Matrix& output, const GaussianHeadConfig& head) {
  if (output.cols() % 2 != 0) throw ConfigError("gaussian head: output width must be even");
  const Index d = output.cols() / 2;
  GaussianBatch batch;
  batch.mean = output.leftCols(d);
  const Matrix raw = output.rightCols(d);
  batch.log_std = raw.cwiseMax(head.log_std_min).cwiseMin(head.log_std_max);
  batch.log_std_active =
      ((raw.array() >= head.log_std_min) && (raw.array() <= head.log_std_max)).cast<double>();
  return batch;
}

Matrix join_gaussian_gradient(const GaussianBatch& batch, const Matrix& d_mean,
                              const Matrix& d_log_std) {
  const Index d = batch.mean.cols();
  Matrix up(batch.mean.rows(), 2 * d);
  up.leftCols(d) = d_mean;
  up.rightCols(d) = d_log_std.cwiseProduct(batch.log_std_active);
  return up;
}

GaussianMlp make_gaussian_mlp(Index input_dim, Index action_dim, const std::vector<Index>& hidden,
                              Rng& rng, const GaussianHeadConfig& head) {
  GaussianMlp net;
  net.net = mlp_init({input_dim, hidden, 2 * action_dim}, rng, true);
  net.head = head;
  return net;
}

GaussianMlpEval gaussian_mlp_eval(const GaussianMlp& net, const Matrix& inputs) {
  GaussianMlpEval out;
  out.tape = mlp_forward_tape(net.net, inputs);
  out.head = split_gaussian_output(out.tape.output(), net.head);
  return out;
}

Matrix head_raw_log_prob(const GaussianBatch& head, const Matrix& raw) {
  const auto z = (raw.array() - head.mean.array()) * (-head.log_std.array()).exp();
  return (-0.5 * z.square() - head.log_std.array() - kHalfLog2Pi).matrix();
}

Matrix squash_log_jacobian(const Matrix& raw) {
  return raw.unaryExpr([](double x) { return log_one_minus_tanh_sq(x); });
}

Matrix actions_to_raw(const Matrix& actions, const GaussianHeadConfig& head) {
  return actions.unaryExpr([&](double a) { return squashed_to_raw(a, head); });
}

}  // namespace cip
