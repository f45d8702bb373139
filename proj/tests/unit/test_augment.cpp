#include <doctest.h>

#include <algorithm>
#include <set>

#include "cip/agent/replay.hpp"
#include "cip/augment/augment.hpp"
#include "cip/causal/reward_matrices.hpp"
#include "cip/envs/envs.hpp"
#include "generators.hpp"

using namespace cip;

namespace {

Transition make_t(std::initializer_list<double> s, std::initializer_list<double> sn) {
  Transition t;
  t.s = Eigen::Map<const Vector>(s.begin(), static_cast<Index>(s.size()));
  t.s_next = Eigen::Map<const Vector>(sn.begin(), static_cast<Index>(sn.size()));
  t.a = Vector::Constant(2, 0.25);
  t.r = -0.5;
  return t;
}

UncontrollableSet uset(std::vector<Index> idx) {
  UncontrollableSet u;
  u.indices = std::move(idx);
  return u;
}

CausalMatrices mask_matrices(const EnvSpec& spec) {
  CausalMatrices m;
  const auto mask = ground_truth_masks(spec).s_mask;
  m.m_s_to_r = Vector(spec.d_s);
  for (Index i = 0; i < spec.d_s; ++i) m.m_s_to_r[i] = mask[static_cast<std::size_t>(i)];
  m.m_s_to_r_std = m.m_s_to_r;
  return m;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("swap replaces the chosen dims in both states") {
    const Transition t = make_t({1, 2, 3}, {1.1, 2.2, 3.3});
    Transition h = make_t({9, 8, 7}, {9.9, 8.8, 7.7});
    h.a = Vector::Constant(2, -0.9);
    h.r = 4.0;
    const Transition out = counterfactual_swap(t, h, {2});
    CHECK(out.s == (Vector(3) << 1, 2, 7).finished());
    CHECK(out.s_next == (Vector(3) << 1.1, 2.2, 7.7).finished());
    CHECK(out.a == t.a);
    CHECK(out.r == t.r);
    CHECK(out.done == t.done);
    CHECK(out.synthetic);
  }

  TEST_CASE("self swap is the identity") {
    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
      const Transition t = gen::transition(rng, 6, 2);
      const Transition out = counterfactual_swap(t, t, {1, 3, 5});
      CHECK(out.s == t.s);
      CHECK(out.s_next == t.s_next);
      CHECK(out.a == t.a);
      CHECK(out.r == t.r);
    }
  }

  TEST_CASE("swap rejects bad dimension sets") {
    const Transition t = make_t({1, 2}, {1, 2});
    CHECK_THROWS_AS(counterfactual_swap(t, t, {}), ConfigError);
    CHECK_THROWS_AS(counterfactual_swap(t, t, {2}), ConfigError);
    CHECK_THROWS_AS(counterfactual_swap(t, make_t({1, 2, 3}, {1, 2, 3}), {0}), ConfigError);
  }

  TEST_CASE("swapped reacher transitions keep their reward under re-evaluation") {
    const EnvSpec spec = make_env("distractor_reacher");
    const auto batch = collect_random(spec, 2000, 3);
    const auto u = ground_truth_uncontrollable(spec);
    Rng rng(4);
    for (int k = 0; k < 500; ++k) {
      const auto& t = batch[static_cast<std::size_t>(gen::int_in(rng, 0, 1999))];
      const auto& h = batch[static_cast<std::size_t>(gen::int_in(rng, 0, 1999))];
      const Transition out = counterfactual_swap(t, h, u);
      CHECK(reward_of(spec, out.s, out.a) == out.r);
    }
  }

  TEST_CASE("empty uncontrollable sets give an empty plan") {
    Rng rng(5);
    std::vector<Transition> batch;
    for (int i = 0; i < 20; ++i) batch.push_back(gen::transition(rng, 4, 2));
    SwapStats st;
    CHECK(plan_swaps(batch, {uset({})}, 1.0, 1, 0, &st).empty());
    CHECK(st.selected == 20);
    CHECK(st.skipped == 20);
  }

  TEST_CASE("two transitions sharing {3, 4}") {
    Rng rng(6);
    const std::vector<Transition> batch{gen::transition(rng, 6, 1), gen::transition(rng, 6, 1)};
    const auto plans = plan_swaps(batch, {uset({3, 4}), uset({3, 4})}, 1.0, 7);
    CHECK(plans.size() == 2);
    for (const auto& p : plans) {
      CHECK(p.source_index != p.partner_index);
      CHECK(p.shared_dims == std::vector<Index>{3, 4});
    }
  }

  TEST_CASE("per-transition sets are intersected") {
    Rng rng(7);
    std::vector<Transition> batch;
    std::vector<UncontrollableSet> sets;
    for (int i = 0; i < 60; ++i) {
      batch.push_back(gen::transition(rng, 8, 1));
      std::vector<Index> idx;
      for (Index d = 0; d < 8; ++d)
        if (cip::uniform(rng, 0, 1) < 0.5) idx.push_back(d);
      sets.push_back(uset(idx));
    }
    for (const auto& p : plan_swaps(batch, sets, 0.7, 8)) {
      const auto& a = sets[p.source_index].indices;
      const auto& b = sets[p.partner_index].indices;
      for (Index d : p.shared_dims) {
        CHECK(std::find(a.begin(), a.end(), d) != a.end());
        CHECK(std::find(b.begin(), b.end(), d) != b.end());
      }
      CHECK_FALSE(p.shared_dims.empty());
    }
  }

  TEST_CASE("reacher batch of 1000 at rate 0.5 yields 500 distractor-only plans") {
    const EnvSpec spec = make_env("distractor_reacher");
    const auto batch = collect_random(spec, 1000, 9);
    const auto u = ground_truth_uncontrollable(spec);
    const auto plans = plan_swaps(batch, {uset(u)}, 0.5, 10);
    CHECK(plans.size() == 500);
    std::set<std::size_t> sources;
    for (const auto& p : plans) {
      sources.insert(p.source_index);
      for (Index d : p.shared_dims) CHECK(d >= 6);
    }
    CHECK(sources.size() == 500);
  }

  TEST_CASE("synthetic transitions never act as sources or partners") {
    Rng rng(11);
    std::vector<Transition> batch;
    for (int i = 0; i < 200; ++i) {
      batch.push_back(gen::transition(rng, 4, 1));
      batch.back().synthetic = i % 2 == 1;
    }
    const auto plans = plan_swaps(batch, {uset({2, 3})}, 1.0, 12);
    CHECK(plans.size() == 100);
    for (const auto& p : plans) {
      CHECK_FALSE(batch[p.source_index].synthetic);
      CHECK_FALSE(batch[p.partner_index].synthetic);
    }
  }

  TEST_CASE("plans do not depend on evaluation order of the seed") {
    Rng rng(13);
    std::vector<Transition> batch;
    for (int i = 0; i < 300; ++i) batch.push_back(gen::transition(rng, 5, 1));
    const auto a = plan_swaps(batch, {uset({1, 4})}, 0.3, 14);
    const auto b = plan_swaps(batch, {uset({1, 4})}, 0.3, 14);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].source_index == b[i].source_index);
      CHECK(a[i].partner_index == b[i].partner_index);
    }
    CHECK_THROWS_AS(plan_swaps(batch, {uset({1})}, 1.5, 1), ConfigError);
  }

  TEST_CASE("augment_buffer: theta 0 and rate 0 add nothing") {
    const EnvSpec spec = make_env("distractor_reacher");
    ReplayBuffer buf(20000);
    for (auto& t : collect_random(spec, 2000, 15)) buf.add(t);
    const CausalMatrices m = mask_matrices(spec);
    CHECK(augment_buffer(buf, m, 0.0, 0.5, 1).empty());
    CHECK(augment_buffer(buf, m, 0.5, 0.0, 1).empty());
    CHECK(buf.size() == 2000);
  }

  TEST_CASE("augment_buffer on fitted reacher matrices") {
    const EnvSpec spec = make_env("distractor_reacher");
    const auto batch = collect_random(spec, 10000, 16);
    ReplayBuffer buf(20000);
    for (const auto& t : batch) buf.add(t);
    const CausalMatrices m = fit_state_reward_mask(batch, CausalConfig{});
    SwapStats st;
    const auto added = augment_buffer(buf, m, 0.05, 0.5, 17, 0, &st);
    CHECK(added.size() >= 4000);
    CHECK(added.size() <= 5000);
    CHECK(buf.size() == 10000 + added.size());
    CHECK(buf.synthetic_count() == added.size());
    // Conservation: controllable dims, action and reward come from a source.
    for (Index d : uncontrollable_set(m, 0.05).indices) CHECK(d >= 6);
    for (const auto& t : added) {
      CHECK(t.synthetic);
      CHECK(reward_of(spec, t.s, t.a) == t.r);
    }
    // Only real entries past first_logical_source are used as sources.
    SwapStats late;
    augment_buffer(buf, m, 0.05, 1.0, 18, 9000, &late);
    CHECK(late.eligible == 1000);
  }

  TEST_CASE("synthetic content matches its source on mask-1 dims") {
    const EnvSpec spec = make_env("distractor_reacher");
    const auto batch = collect_random(spec, 3000, 19);
    const auto u = ground_truth_uncontrollable(spec);
    const auto plans = plan_swaps(batch, {uset(u)}, 0.8, 20);
    const auto out = materialize_swaps(batch, plans);
    REQUIRE(out.size() == plans.size());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      const Transition& src = batch[plans[k].source_index];
      CHECK(out[k].s.head(6) == src.s.head(6));
      CHECK(out[k].s_next.head(6) == src.s_next.head(6));
      CHECK(out[k].a == src.a);
      CHECK(out[k].r == src.r);
      CHECK(reward_of(spec, out[k].s, out[k].a) == out[k].r);
    }
  }
}
