#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cip/numkit/linalg.hpp"

namespace cip {

/// Differential entropy of a unit-variance sample, maximum-entropy
/// approximation with k1 = 79.047, k2 = 7.4129, gamma = 0.37457.
double maxent_entropy(const Eigen::Ref<const Eigen::VectorXd>& u);

using EntropyFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

struct LingamOptions {
  /// Variables that may only enter the ordering after every other variable.
  std::vector<Index> sink_variables;
  EntropyFn entropy = maxent_entropy;
  /// Column names used in degenerate-input errors; defaults to x1..xp.
  std::vector<std::string> names;
};

struct LingamResult {
  std::vector<Index> order;  // causal order, most exogenous first
  Matrix B;                  // B[j,k]: coefficient of x_k in x_j, original units
  Matrix B_std;              // same on standardized columns
  Vector mean;
  Vector stddev;
};

/// DirectLiNGAM: pick the most exogenous variable by the pairwise
/// likelihood-ratio score, regress it out of the rest, repeat; then least
/// squares along the recovered order. Throws DegenerateInputError for a
/// zero-variance (or collinear) column or n < p + 2.
LingamResult direct_lingam_fit(const Matrix& data, const LingamOptions& options = {});

inline Matrix direct_lingam(const Matrix& data) { return direct_lingam_fit(data).B; }

}  // namespace cip
