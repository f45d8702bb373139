#pragma once

#include "cip/numkit/linalg.hpp"
#include "cip/numkit/mlp.hpp"

namespace cip {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

struct GaussianHeadConfig {
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  // Clamp applied before atanh when mapping a stored action back to raw space.
  double atanh_clamp = 1.0 - 1e-6;
};

/// Squashed diagonal Gaussian sample, one independent factor per action dim.
/// `per_dim_log_prob` is the density of `action` (tanh change of variables);
/// `per_dim_raw_log_prob` is the density of `raw_sample` before squashing.
struct GaussianHeadOutput {
  Vector mean;
  Vector log_std;
  Vector raw_sample;
  Vector action;
  Vector per_dim_log_prob;
  Vector per_dim_raw_log_prob;
};

GaussianHeadOutput gaussian_head_sample(const Vector& mean, const Vector& log_std,
                                        const Vector& noise, const GaussianHeadConfig& config = {});

/// log(1 - tanh(x)^2), exact and finite for every finite x.
double log_one_minus_tanh_sq(double x);

inline double gaussian_log_density(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi;
}

/// Raw-space preimage of a stored action, clamped away from +-1.
double squashed_to_raw(double action, const GaussianHeadConfig& config = {});

/// MLP whose output splits into [mean | log_std], each of width action_dim.
struct GaussianMlp {
  MlpParams net;
  GaussianHeadConfig head;

  Index action_dim() const { return net.output_dim() / 2; }
  Index input_dim() const { return net.input_dim(); }
};

/// Batched head parameters; `log_std_active` is 1 where the clamp is inactive
/// (gradient passes) and 0 where it saturated.
struct GaussianBatch {
  Matrix mean;
  Matrix log_std;
  Matrix log_std_active;
};

GaussianBatch split_gaussian_output(const Matrix& output, const GaussianHeadConfig& head);

/// Back-propagates d/d(mean) and d/d(clamped log_std) into an upstream for the
/// raw network output.
Matrix join_gaussian_gradient(const GaussianBatch& batch, const Matrix& d_mean,
                              const Matrix& d_log_std);

/// Output layer starts at zero, so a fresh head is N(0, 1) in raw space.
GaussianMlp make_gaussian_mlp(Index input_dim, Index action_dim, const std::vector<Index>& hidden,
                              Rng& rng, const GaussianHeadConfig& head = {});

struct GaussianMlpEval {
  MlpTape tape;
  GaussianBatch head;
};

GaussianMlpEval gaussian_mlp_eval(const GaussianMlp& net, const Matrix& inputs);

/// Per-entry raw-space log density of `raw` under the batch head.
Matrix head_raw_log_prob(const GaussianBatch& head, const Matrix& raw);

/// Element-wise log(1 - tanh(raw)^2).
Matrix squash_log_jacobian(const Matrix& raw);

/// Element-wise clamped atanh of stored actions.
Matrix actions_to_raw(const Matrix& actions, const GaussianHeadConfig& head = {});

}  // namespace cip
