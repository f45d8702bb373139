#include "cip/causal/reward_matrices.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cip/causal/direct_lingam.hpp"
#include "cip/numkit/error.hpp"

namespace cip {

bool UncontrollableSet::contains(Index i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

ActionWeights ActionWeights::uniform(Index d_a) {
  ActionWeights w;
  w.omega = Vector::Ones(d_a);
  w.normalization = "uniform";
  return w;
}

Matrix transitions_to_columns(const std::vector<Transition>& batch) {
  if (batch.empty()) return Matrix(0, 0);
  const Index ds = batch.front().s.size();
  const Index da = batch.front().a.size();
  Matrix X(static_cast<Index>(batch.size()), ds + da + 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (t.s.size() != ds || t.a.size() != da) {
      throw ConfigError("transitions_to_columns: inconsistent transition dimensions");
    }
    const auto row = static_cast<Index>(i);
    X.row(row).segment(0, ds) = t.s.transpose();
    X.row(row).segment(ds, da) = t.a.transpose();
    X(row, ds + da) = t.r;
  }
  return X;
}

std::vector<std::string> transition_column_names(Index d_s, Index d_a) {
  std::vector<std::string> names;
  for (Index i = 0; i < d_s; ++i) names.push_back("s" + std::to_string(i + 1));
  for (Index i = 0; i < d_a; ++i) names.push_back("a" + std::to_string(i + 1));
  names.push_back("r");
  return names;
}

CausalMatrices fit_reward_matrices(const std::vector<Transition>& batch, const CausalConfig& config) {
  if (static_cast<Index>(batch.size()) < config.causal_sample_size) {
    throw ConfigError("causal fit needs at least " + std::to_string(config.causal_sample_size) +
                          " transitions, got " + std::to_string(batch.size()),
                      "causal_sample_size");
  }
  if (batch.empty()) throw ConfigError("causal fit: empty batch");
  const Index ds = batch.front().s.size();
  const Index da = batch.front().a.size();
  const Matrix X = transitions_to_columns(batch);
  const Index r = ds + da;

  LingamOptions options;
  options.names = transition_column_names(ds, da);
  if (config.reward_sink) options.sink_variables = {r};
  const LingamResult fit = direct_lingam_fit(X, options);

  CausalMatrices m;
  m.m_s_to_r = fit.B.row(r).segment(0, ds).transpose();
  m.m_a_to_r = fit.B.row(r).segment(ds, da).transpose();
  m.m_s_to_r_std = fit.B_std.row(r).segment(0, ds).transpose();
  m.m_a_to_r_std = fit.B_std.row(r).segment(ds, da).transpose();
  m.fitted_on = static_cast<Index>(batch.size());
  return m;
}

CausalMatrices fit_state_reward_mask(const std::vector<Transition>& batch, const CausalConfig& config) {
  CausalMatrices m = fit_reward_matrices(batch, config);
  m.m_a_to_r.resize(0);
  m.m_a_to_r_std.resize(0);
  return m;
}

ActionFit fit_action_reward_weights(const std::vector<Transition>& batch, const CausalConfig& config) {
  ActionFit out;
  out.matrices = fit_reward_matrices(batch, config);
  out.matrices.m_s_to_r.resize(0);
  out.matrices.m_s_to_r_std.resize(0);
  out.weights = action_weights_from(out.matrices.m_a_to_r_std, config.w_min);
  return out;
}

UncontrollableSet uncontrollable_set(const CausalMatrices& m, double theta) {
  if (!(theta >= 0.0)) throw ConfigError("uncontrollable_set: theta must be non-negative", "theta");
  const Vector& basis = m.m_s_to_r_std.size() == m.m_s_to_r.size() ? m.m_s_to_r_std : m.m_s_to_r;
  UncontrollableSet u;
  u.theta = theta;
  for (Index i = 0; i < basis.size(); ++i) {
    if (std::abs(basis[i]) < theta) u.indices.push_back(i);
  }
  return u;
}

ActionWeights action_weights_from(const Vector& m_a_to_r, double w_min) {
  if (m_a_to_r.size() == 0) throw ConfigError("action weights: empty coefficient vector");
  if (!(w_min > 0.0)) throw ConfigError("action weights: w_min must be positive", "w_min");
  ActionWeights w;
  w.omega = m_a_to_r.cwiseAbs().array() + w_min;
  const double total = w.omega.sum();
  w.omega = (w.omega / total) * static_cast<double>(w.omega.size());
  return w;
}

Vector reweight_actions(const Vector& a, const ActionWeights& w) {
  if (a.size() != w.omega.size()) throw ConfigError("reweight_actions: length mismatch");
  return w.omega.cwiseProduct(a);
}

namespace {

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) return Vector();
  const auto values = doc[key].get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

std::string matrices_to_json(const CausalMatrices& m, const ActionWeights& w, double theta) {
  nlohmann::ordered_json doc;
  doc["method"] = m.method;
  doc["fitted_on"] = m.fitted_on;
  doc["m_s_to_r"] = vec_json(m.m_s_to_r);
  doc["m_a_to_r"] = vec_json(m.m_a_to_r);
  doc["m_s_to_r_std"] = vec_json(m.m_s_to_r_std);
  doc["m_a_to_r_std"] = vec_json(m.m_a_to_r_std);
  doc["omega"] = vec_json(w.omega);
  doc["theta"] = theta;
  doc["uncontrollable"] = uncontrollable_set(m, theta).indices;
  return doc.dump(2);
}

MatricesDocument matrices_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("matrices: invalid JSON: ") + e.what());
  }
  MatricesDocument out;
  try {
    out.matrices.method = doc.value("method", std::string("direct_lingam"));
    out.matrices.fitted_on = doc.value("fitted_on", Index{0});
    out.matrices.m_s_to_r = json_vec(doc, "m_s_to_r");
    out.matrices.m_a_to_r = json_vec(doc, "m_a_to_r");
    out.matrices.m_s_to_r_std = json_vec(doc, "m_s_to_r_std");
    out.matrices.m_a_to_r_std = json_vec(doc, "m_a_to_r_std");
    out.weights.omega = json_vec(doc, "omega");
    out.theta = doc.value("theta", 0.05);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("matrices: bad field: ") + e.what());
  }
  if (out.matrices.m_s_to_r.size() == 0) throw ConfigError("matrices: missing m_s_to_r", "m_s_to_r");
  return out;
}

}  // namespace cip
