#include "cip/augment/augment.hpp"

#include <algorithm>
#include <cmath>

#include "cip/numkit/error.hpp"

namespace cip {

Transition counterfactual_swap(const Transition& t, const Transition& t_hat,
                               const std::vector<Index>& dims) {
  if (dims.empty()) throw ConfigError("counterfactual_swap: empty dimension set");
  if (t.s.size() != t_hat.s.size() || t.a.size() != t_hat.a.size() ||
      t.s_next.size() != t_hat.s_next.size()) {
    throw ConfigError("counterfactual_swap: transition dimensions differ");
  }
  Transition out = t;
  for (Index d : dims) {
    if (d < 0 || d >= t.s.size()) throw ConfigError("counterfactual_swap: dimension out of range");
    out.s[d] = t_hat.s[d];
    out.s_next[d] = t_hat.s_next[d];
  }
  out.synthetic = true;
  return out;
}

namespace {

std::vector<Index> intersect(const UncontrollableSet& a, const UncontrollableSet& b) {
  std::vector<Index> out;
  std::set_intersection(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
                        std::back_inserter(out));
  return out;
}

std::uint64_t bounded(std::uint64_t h, std::uint64_t n) {
  // multiply-shift range reduction
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

}  // namespace

std::vector<SwapPlan> plan_swaps(const std::vector<Transition>& batch,
                                 const std::vector<UncontrollableSet>& u_sets, double rate,
                                 std::uint64_t seed, std::size_t first_source, SwapStats* stats) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("plan_swaps: rate must lie in [0,1]", "augment_rate");
  if (u_sets.size() != 1 && u_sets.size() != batch.size()) {
    throw ConfigError("plan_swaps: need one uncontrollable set per transition or a single shared set");
  }
  auto uset = [&](std::size_t i) -> const UncontrollableSet& {
    return u_sets.size() == 1 ? u_sets.front() : u_sets[i];
  };

  std::vector<std::size_t> real;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].synthetic) real.push_back(i);
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i : real) {
    if (i >= first_source) eligible.push_back(i);
  }

  SwapStats local;
  local.eligible = eligible.size();
  const auto want = static_cast<std::size_t>(std::floor(rate * static_cast<double>(eligible.size())));

  // Deterministic subset: rank eligible sources by a per-index hash.
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(eligible.size());
  for (std::size_t i : eligible) keyed.emplace_back(counter_hash(seed, i, 0), i);
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(want), keyed.end());
  std::vector<std::size_t> sources;
  for (std::size_t k = 0; k < want; ++k) sources.push_back(keyed[k].second);
  std::sort(sources.begin(), sources.end());
  local.selected = sources.size();

  std::vector<SwapPlan> plans;
  for (std::size_t src : sources) {
    bool found = false;
    if (real.size() > 1 && !uset(src).indices.empty()) {
      for (int attempt = 0; attempt < kPartnerRetries && !found; ++attempt) {
        const std::uint64_t h = counter_hash(seed, src, static_cast<std::uint64_t>(attempt) + 1);
        const std::size_t partner = real[bounded(h, real.size())];
        if (partner == src) continue;
        std::vector<Index> shared = intersect(uset(src), uset(partner));
        if (shared.empty()) continue;
        plans.push_back({src, partner, std::move(shared)});
        found = true;
      }
    }
    if (!found) ++local.skipped;
  }
  if (stats) *stats = local;
  return plans;
}

std::vector<Transition> materialize_swaps(const std::vector<Transition>& batch,
                                          const std::vector<SwapPlan>& plans) {
  std::vector<Transition> out;
  out.reserve(plans.size());
  for (const auto& p : plans) {
    out.push_back(counterfactual_swap(batch.at(p.source_index), batch.at(p.partner_index), p.shared_dims));
  }
  return out;
}

std::vector<Transition> augment_buffer(ReplayBuffer& local_buffer, const CausalMatrices& matrices,
                                       double theta, double rate, std::uint64_t seed,
                                       std::uint64_t first_logical_source, SwapStats* stats) {
  if (stats) *stats = SwapStats{};
  const UncontrollableSet u = uncontrollable_set(matrices, theta);
  if (u.indices.empty() || rate <= 0.0 || local_buffer.size() == 0) return {};

  std::vector<Transition> snapshot;
  snapshot.reserve(local_buffer.size());
  for (std::size_t i = 0; i < local_buffer.size(); ++i) snapshot.push_back(local_buffer.at(i));
  const std::uint64_t first = local_buffer.first_logical();
  const std::size_t first_source =
      first_logical_source > first ? static_cast<std::size_t>(first_logical_source - first) : 0;

  std::vector<SwapPlan> plans = plan_swaps(snapshot, {u}, rate, seed, first_source, stats);
  std::vector<Transition> added = materialize_swaps(snapshot, plans);
  for (const auto& t : added) local_buffer.add(t);
  return added;
}

}  // namespace cip
