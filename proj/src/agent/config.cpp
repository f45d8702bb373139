#include "cip/agent/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cip/numkit/error.hpp"

namespace cip {

const char* bonus_name(BonusKind b) { return b == BonusKind::Empowerment ? "empowerment" : "entropy"; }

void AgentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "' " + why, field);
  };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0, 1)");
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (!(inverse_lr > 0.0)) fail("inverse_lr", "must be positive");
  if (batch_size <= 0) fail("batch_size", "must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha", "must be non-negative");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau", "must lie in (0, 1]");
  if (causal_update_interval <= 0) fail("causal_update_interval", "must be positive");
  if (causal_sample_size <= 0) fail("causal_sample_size", "must be positive");
  if (!(theta >= 0.0)) fail("theta", "must be non-negative");
  if (!(augment_rate >= 0.0 && augment_rate <= 1.0)) fail("augment_rate", "must lie in [0, 1]");
  if (total_steps < 0) fail("total_steps", "must be non-negative");
  if (hidden.empty()) fail("hidden", "needs at least one layer");
  for (Index h : hidden) {
    if (h <= 0) fail("hidden", "widths must be positive");
  }
  if (warmup_steps < 0) fail("warmup_steps", "must be non-negative");
  if (target_update_interval <= 0) fail("target_update_interval", "must be positive");
  if (replay_capacity <= 0) fail("replay_capacity", "must be positive");
  if (!(w_min > 0.0)) fail("w_min", "must be positive");
  if (!(synthetic_sample_weight >= 0.0 && synthetic_sample_weight <= 1.0)) {
    fail("synthetic_sample_weight", "must lie in [0, 1]");
  }
  if (augment_rate > 0.0 && !causal_discovery) fail("augment_rate", "needs causal_discovery");
}

std::size_t AgentConfig::local_capacity() const {
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(causal_sample_size) * (1.0 + augment_rate)));
}

AgentConfig baseline_sac_config(AgentConfig config) {
  config.bonus = BonusKind::Entropy;
  config.causal_discovery = false;
  config.augment_rate = 0.0;
  config.use_action_weights = false;
  return config;
}

AgentConfig variant_config(AgentConfig base, const std::string& variant) {
  if (variant == "cip") return base;
  if (variant == "sac") return baseline_sac_config(base);
  if (variant == "no_aug") {
    base.augment_rate = 0.0;
    return base;
  }
  if (variant == "no_emp") {
    base.bonus = BonusKind::Entropy;
    base.use_action_weights = false;
    return base;
  }
  throw ConfigError("unknown variant '" + variant + "'", "variant");
}

std::string config_to_json(const AgentConfig& c) {
  nlohmann::ordered_json j;
  j["gamma"] = c.gamma;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["causal_update_interval"] = c.causal_update_interval;
  j["causal_sample_size"] = c.causal_sample_size;
  j["theta"] = c.theta;
  j["augment_rate"] = c.augment_rate;
  j["total_steps"] = c.total_steps;
  j["seed"] = c.seed;
  j["hidden"] = c.hidden;
  j["warmup_steps"] = c.warmup_steps;
  j["target_update_interval"] = c.target_update_interval;
  j["replay_capacity"] = c.replay_capacity;
  j["w_min"] = c.w_min;
  j["bonus"] = bonus_name(c.bonus);
  j["causal_discovery"] = c.causal_discovery;
  j["use_action_weights"] = c.use_action_weights;
  j["time_limit_bootstrap"] = c.time_limit_bootstrap;
  j["inverse_lr"] = c.inverse_lr;
  j["synthetic_sample_weight"] = c.synthetic_sample_weight;
  return j.dump(2);
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type", key);
  }
}

}  // namespace

AgentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "gamma", "lr", "batch_size", "alpha", "tau", "causal_update_interval", "causal_sample_size",
      "theta", "augment_rate", "total_steps", "seed", "hidden", "warmup_steps",
      "target_update_interval", "replay_capacity", "w_min", "bonus", "causal_discovery",
      "use_action_weights", "time_limit_bootstrap", "inverse_lr", "synthetic_sample_weight"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown config field '" + item.key() + "'", item.key());
    }
  }
  AgentConfig c;
  read(j, "gamma", c.gamma);
  read(j, "lr", c.lr);
  read(j, "batch_size", c.batch_size);
  read(j, "alpha", c.alpha);
  read(j, "tau", c.tau);
  read(j, "causal_update_interval", c.causal_update_interval);
  read(j, "causal_sample_size", c.causal_sample_size);
  read(j, "theta", c.theta);
  read(j, "augment_rate", c.augment_rate);
  read(j, "total_steps", c.total_steps);
  read(j, "seed", c.seed);
  read(j, "hidden", c.hidden);
  read(j, "warmup_steps", c.warmup_steps);
  read(j, "target_update_interval", c.target_update_interval);
  read(j, "replay_capacity", c.replay_capacity);
  read(j, "w_min", c.w_min);
  std::string bonus = bonus_name(c.bonus);
  read(j, "bonus", bonus);
  if (bonus == "empowerment") {
    c.bonus = BonusKind::Empowerment;
  } else if (bonus == "entropy") {
    c.bonus = BonusKind::Entropy;
  } else {
    throw ConfigError("config field 'bonus' must be \"empowerment\" or \"entropy\"", "bonus");
  }
  read(j, "causal_discovery", c.causal_discovery);
  read(j, "use_action_weights", c.use_action_weights);
  read(j, "time_limit_bootstrap", c.time_limit_bootstrap);
  read(j, "inverse_lr", c.inverse_lr);
  read(j, "synthetic_sample_weight", c.synthetic_sample_weight);
  c.validate();
  return c;
}

AgentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'", "config");
  std::ostringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace cip
