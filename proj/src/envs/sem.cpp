#include "cip/envs/sem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "cip/numkit/error.hpp"

namespace cip {

const char* noise_dist_name(NoiseDist d) {
  switch (d) {
    case NoiseDist::Uniform:
      return "uniform";
    case NoiseDist::Laplace:
      return "laplace";
    case NoiseDist::Gaussian:
      return "gaussian";
  }
  return "uniform";
}

NoiseDist parse_noise_dist(const std::string& name) {
  if (name == "uniform") return NoiseDist::Uniform;
  if (name == "laplace") return NoiseDist::Laplace;
  if (name == "gaussian") return NoiseDist::Gaussian;
  throw ConfigError("unknown noise distribution '" + name + "'", "noise");
}

std::vector<Index> SemSpec::causal_order() const {
  std::vector<Index> order;
  std::vector<bool> placed(static_cast<std::size_t>(p), false);
  for (Index round = 0; round < p; ++round) {
    Index pick = -1;
    for (Index j = 0; j < p && pick < 0; ++j) {
      if (placed[static_cast<std::size_t>(j)]) continue;
      bool ready = true;
      for (Index k = 0; k < p; ++k) {
        if (B(j, k) != 0.0 && !placed[static_cast<std::size_t>(k)]) {
          ready = false;
          break;
        }
      }
      if (ready) pick = j;
    }
    if (pick < 0) throw ConfigError("sem: coefficient matrix contains a cycle", "B");
    placed[static_cast<std::size_t>(pick)] = true;
    order.push_back(pick);
  }
  return order;
}

void SemSpec::validate() const {
  if (p <= 0) throw ConfigError("sem: p must be positive", "p");
  if (B.rows() != p || B.cols() != p) throw ConfigError("sem: B must be p x p", "B");
  if (!B.allFinite()) throw ConfigError("sem: B has non-finite entries", "B");
  if (static_cast<Index>(noise.size()) != p || noise_scale.size() != p) {
    throw ConfigError("sem: need one noise distribution and scale per variable", "noise");
  }
  for (Index j = 0; j < p; ++j) {
    if (!(noise_scale[j] > 0.0) || !std::isfinite(noise_scale[j])) {
      throw ConfigError("sem: noise scales must be finite and positive", "scale");
    }
  }
  if (reward_index < -1 || reward_index >= p) throw ConfigError("sem: bad reward_index", "reward_index");
  causal_order();
}

SemSpec make_sem(const Matrix& B, NoiseDist dist, double scale, Index reward_index) {
  SemSpec spec;
  spec.p = B.rows();
  spec.B = B;
  spec.noise.assign(static_cast<std::size_t>(spec.p), dist);
  spec.noise_scale = Vector::Constant(spec.p, scale);
  spec.reward_index = reward_index;
  spec.validate();
  return spec;
}

namespace {

double draw_noise(NoiseDist d, double scale, Rng& rng) {
  switch (d) {
    case NoiseDist::Uniform:
      return uniform(rng, -scale, scale);
    case NoiseDist::Laplace: {
      const double u = uniform(rng, -0.5, 0.5);
      return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
    }
    case NoiseDist::Gaussian:
      return scale * standard_normal(rng);
  }
  return 0.0;
}

}  // namespace

Matrix sem_generate(const SemSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 0) throw ConfigError("sem_generate: n must be non-negative", "n");
  const std::vector<Index> order = spec.causal_order();
  Rng rng(seed);
  Matrix X(n, spec.p);
  for (Index row = 0; row < n; ++row) {
    for (Index j : order) {
      double v = draw_noise(spec.noise[static_cast<std::size_t>(j)], spec.noise_scale[j], rng);
      for (Index k = 0; k < spec.p; ++k) {
        if (spec.B(j, k) != 0.0) v += spec.B(j, k) * X(row, k);
      }
      X(row, j) = v;
    }
  }
  return X;
}

SemSpec random_sem(const RandomSemOptions& o, std::uint64_t seed) {
  if (o.p <= 0) throw ConfigError("random_sem: p must be positive", "p");
  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(o.p));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix B = Matrix::Zero(o.p, o.p);
  // perm[i] is the i-th variable in causal order; edges only point forward.
  for (Index i = 0; i < o.p; ++i) {
    for (Index k = 0; k < i; ++k) {
      if (uniform(rng, 0.0, 1.0) >= o.edge_prob) continue;
      const double mag = uniform(rng, o.min_abs_coef, o.max_abs_coef);
      const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      B(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]) = sign * mag;
    }
  }
  return make_sem(B, o.dist, 1.0);
}

SemSpec sem_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sem: invalid JSON: ") + e.what());
  }
  if (!doc.contains("B") || !doc["B"].is_array()) throw ConfigError("sem: missing B", "B");
  const auto& rows = doc["B"];
  const Index p = static_cast<Index>(rows.size());
  SemSpec spec;
  spec.p = p;
  spec.B = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j)];
    if (!row.is_array() || static_cast<Index>(row.size()) != p) {
      throw ConfigError("sem: B row " + std::to_string(j) + " must have p entries", "B");
    }
    for (Index k = 0; k < p; ++k) spec.B(j, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  const auto noise = doc.value("noise", nlohmann::json("uniform"));
  for (Index j = 0; j < p; ++j) {
    spec.noise.push_back(parse_noise_dist(
        noise.is_array() ? noise.at(static_cast<std::size_t>(j)).get<std::string>()
                         : noise.get<std::string>()));
  }
  const auto scale = doc.value("scale", nlohmann::json(1.0));
  spec.noise_scale.resize(p);
  for (Index j = 0; j < p; ++j) {
    spec.noise_scale[j] =
        scale.is_array() ? scale.at(static_cast<std::size_t>(j)).get<double>() : scale.get<double>();
  }
  spec.reward_index = doc.value("reward_index", Index{-1});
  spec.validate();
  return spec;
}

std::string sem_to_json(const SemSpec& spec) {
  nlohmann::json doc;
  doc["B"] = nlohmann::json::array();
  for (Index j = 0; j < spec.p; ++j) {
    std::vector<double> row(spec.B.row(j).data(), spec.B.row(j).data() + spec.p);
    doc["B"].push_back(row);
  }
  doc["noise"] = nlohmann::json::array();
  for (auto d : spec.noise) doc["noise"].push_back(noise_dist_name(d));
  doc["scale"] = std::vector<double>(spec.noise_scale.data(), spec.noise_scale.data() + spec.p);
  doc["reward_index"] = spec.reward_index;
  return doc.dump(2);
}

}  // namespace cip
