#include "cip/agent/replay.hpp"

#include <random>

#include "cip/numkit/error.hpp"

namespace cip {

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive", "capacity");
  data_.resize(capacity);
}

void ReplayBuffer::add(Transition t) {
  if (size_ == data_.size()) {
    if (data_[head_].synthetic) --synthetic_;
  } else {
    ++size_;
  }
  if (t.synthetic) ++synthetic_;
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % data_.size();
  ++total_added_;
}

void ReplayBuffer::clear() {
  const std::size_t cap = data_.size();
  data_.assign(cap, Transition{});
  head_ = size_ = synthetic_ = 0;
  total_added_ = 0;
}

double ReplayBuffer::synthetic_fraction() const {
  return size_ == 0 ? 0.0 : static_cast<double>(synthetic_) / static_cast<double>(size_);
}

const Transition& ReplayBuffer::at(std::size_t position) const {
  if (position >= size_) throw ConfigError("replay buffer position out of range");
  const std::size_t cap = data_.size();
  return data_[(head_ + cap - size_ + position) % cap];
}

const Transition& ReplayBuffer::at_logical(std::uint64_t logical) const {
  if (logical < first_logical() || logical >= total_added_) {
    throw ConfigError("replay buffer logical index evicted or not yet written");
  }
  return at(static_cast<std::size_t>(logical - first_logical()));
}

std::vector<Transition> ReplayBuffer::recent(std::size_t n) const {
  const std::size_t k = std::min(n, size_);
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i = size_ - k; i < size_; ++i) out.push_back(at(i));
  return out;
}

std::vector<std::size_t> ReplayBuffer::sample_positions(std::size_t batch, Rng& rng,
                                                        double synthetic_weight) const {
  if (size_ == 0) throw ConfigError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> out(batch);
  const bool thin = synthetic_weight < 1.0 && synthetic_count() > 0 &&
                    (synthetic_weight > 0.0 || synthetic_count() < size_);
  for (auto& p : out) {
    p = pick(rng);
    // Rejection thinning; weight 1 draws exactly as the uniform sampler.
    while (thin && at(p).synthetic && uniform(rng, 0.0, 1.0) >= synthetic_weight) p = pick(rng);
  }
  return out;
}

namespace {

template <typename Get>
Batch stack(std::size_t n, Get get) {
  Batch b;
  if (n == 0) return b;
  const Transition& first = get(0);
  const Index ds = first.s.size();
  const Index da = first.a.size();
  const auto rows = static_cast<Index>(n);
  b.s.resize(rows, ds);
  b.a.resize(rows, da);
  b.r.resize(rows);
  b.s_next.resize(rows, ds);
  b.done.resize(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = get(i);
    const auto row = static_cast<Index>(i);
    b.s.row(row) = t.s.transpose();
    b.a.row(row) = t.a.transpose();
    b.r[row] = t.r;
    b.s_next.row(row) = t.s_next.transpose();
    b.done[row] = t.done ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& positions) {
  return stack(positions.size(), [&](std::size_t i) -> const Transition& { return buffer.at(positions[i]); });
}

Batch make_batch(const std::vector<Transition>& transitions) {
  return stack(transitions.size(), [&](std::size_t i) -> const Transition& { return transitions[i]; });
}

}  // namespace cip
