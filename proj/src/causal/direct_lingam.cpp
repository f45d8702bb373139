#include "cip/causal/direct_lingam.hpp"

#include <algorithm>
#include <cmath>

#include "cip/numkit/error.hpp"

namespace cip {

double maxent_entropy(const Eigen::Ref<const Eigen::VectorXd>& u) {
  constexpr double k1 = 79.047;
  constexpr double k2 = 7.4129;
  constexpr double gamma = 0.37457;
  const double n = static_cast<double>(u.size());
  const auto a = u.array().abs();
  // log cosh u = |u| + log1p(exp(-2|u|)) - log 2, stable for large |u|
  const double log_cosh = (a + (-2.0 * a).exp().log1p()).sum() / n - std::log(2.0);
  const double gauss_term = (u.array() * (-0.5 * u.array().square()).exp()).sum() / n;
  return 0.5 * (1.0 + std::log(2.0 * M_PI)) - k1 * (log_cosh - gamma) * (log_cosh - gamma) -
         k2 * gauss_term * gauss_term;
}

namespace {

using ColMatrix = Eigen::MatrixXd;

std::string column_name(const LingamOptions& o, Index j) {
  if (j < static_cast<Index>(o.names.size())) return o.names[static_cast<std::size_t>(j)];
  return "x" + std::to_string(j + 1);
}

// Centers and scales column j in place; returns false if it has no variance left.
bool standardize(ColMatrix& X, Index j, double min_var) {
  const double mean = X.col(j).mean();
  X.col(j).array() -= mean;
  const double var = X.col(j).squaredNorm() / static_cast<double>(X.rows());
  if (!(var > min_var)) return false;
  X.col(j) /= std::sqrt(var);
  return true;
}

}  // namespace

LingamResult direct_lingam_fit(const Matrix& data, const LingamOptions& options) {
  const Index n = data.rows();
  const Index p = data.cols();
  if (p < 1) throw DegenerateInputError("direct_lingam: no variables", "");
  if (n < p + 2) {
    throw DegenerateInputError("direct_lingam: need at least p + 2 = " + std::to_string(p + 2) +
                                   " rows, got " + std::to_string(n),
                               "");
  }
  if (!data.allFinite()) throw DegenerateInputError("direct_lingam: non-finite data", "");

  LingamResult result;
  result.mean = data.colwise().mean().transpose();
  result.stddev.resize(p);
  ColMatrix Z = data;  // column-major copy for column sweeps
  for (Index j = 0; j < p; ++j) {
    Z.col(j).array() -= result.mean[j];
    const double var = Z.col(j).squaredNorm() / static_cast<double>(n);
    const double scale = std::max(1.0, std::abs(result.mean[j]));
    if (!(var > 1e-24 * scale * scale)) {
      throw DegenerateInputError("direct_lingam: column '" + column_name(options, j) +
                                     "' has zero variance",
                                 column_name(options, j));
    }
    result.stddev[j] = std::sqrt(var);
    Z.col(j) /= result.stddev[j];
  }
  const ColMatrix Z0 = Z;

  std::vector<bool> is_sink(static_cast<std::size_t>(p), false);
  for (Index s : options.sink_variables) {
    if (s < 0 || s >= p) throw ConfigError("direct_lingam: sink variable out of range");
    is_sink[static_cast<std::size_t>(s)] = true;
  }

  std::vector<Index> remaining(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) remaining[static_cast<std::size_t>(j)] = j;
  Eigen::VectorXd resid(n);

  while (!remaining.empty()) {
    const std::size_t m = remaining.size();
    std::vector<Index> candidates;
    for (Index j : remaining) {
      if (!is_sink[static_cast<std::size_t>(j)]) candidates.push_back(j);
    }
    if (candidates.empty()) candidates = remaining;

    Index chosen = candidates.front();
    if (m > 1 && candidates.size() > 1) {
      std::vector<double> h(m);
      for (std::size_t a = 0; a < m; ++a) h[a] = options.entropy(Z.col(remaining[a]));
      std::vector<double> score(m, 0.0);  // sum of squared negative parts
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
          const Index i = remaining[a];
          const Index j = remaining[b];
          const bool need_a = !is_sink[static_cast<std::size_t>(i)] || candidates.size() == m;
          const bool need_b = !is_sink[static_cast<std::size_t>(j)] || candidates.size() == m;
          if (!need_a && !need_b) continue;
          const double rho = Z.col(i).dot(Z.col(j)) / static_cast<double>(n);
          const double s = std::sqrt(std::max(1.0 - rho * rho, 1e-12));
          resid = (Z.col(i) - rho * Z.col(j)) / s;
          const double h_ri = options.entropy(resid);
          resid = (Z.col(j) - rho * Z.col(i)) / s;
          const double h_rj = options.entropy(resid);
          // Positive when i -> j is the better-supported direction.
          const double diff = (h[b] + h_ri) - (h[a] + h_rj);
          const double neg_a = std::min(0.0, diff);
          const double neg_b = std::min(0.0, -diff);
          score[a] += neg_a * neg_a;
          score[b] += neg_b * neg_b;
        }
      }
      double best = 0.0;
      bool first = true;
      for (std::size_t a = 0; a < m; ++a) {
        const Index i = remaining[a];
        if (std::find(candidates.begin(), candidates.end(), i) == candidates.end()) continue;
        if (first || score[a] < best) {
          best = score[a];
          chosen = i;
          first = false;
        }
      }
    }

    result.order.push_back(chosen);
    remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
    for (Index j : remaining) {
      const double beta = Z.col(j).dot(Z.col(chosen)) / static_cast<double>(n);
      Z.col(j) -= beta * Z.col(chosen);
      if (!standardize(Z, j, 1e-12)) {
        throw DegenerateInputError("direct_lingam: column '" + column_name(options, j) +
                                       "' is collinear with earlier variables",
                                   column_name(options, j));
      }
    }
  }

  // Least squares along the order on standardized data via the correlation matrix.
  const Eigen::MatrixXd C = (Z0.transpose() * Z0) / static_cast<double>(n);
  result.B_std = Matrix::Zero(p, p);
  for (Index k = 1; k < p; ++k) {
    const Index target = result.order[static_cast<std::size_t>(k)];
    Eigen::MatrixXd Cpp(k, k);
    Eigen::VectorXd cpt(k);
    for (Index a = 0; a < k; ++a) {
      const Index ia = result.order[static_cast<std::size_t>(a)];
      cpt[a] = C(ia, target);
      for (Index b = 0; b < k; ++b) Cpp(a, b) = C(ia, result.order[static_cast<std::size_t>(b)]);
    }
    const Eigen::VectorXd beta = Cpp.ldlt().solve(cpt);
    for (Index a = 0; a < k; ++a) result.B_std(target, result.order[static_cast<std::size_t>(a)]) = beta[a];
  }
  result.B = Matrix(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < p; ++k) {
      result.B(j, k) = result.B_std(j, k) * result.stddev[j] / result.stddev[k];
    }
  }
  return result;
}

}  // namespace cip
