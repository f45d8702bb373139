#pragma once

#include <cstdint>
#include <vector>

#include "cip/envs/transition.hpp"
#include "cip/numkit/linalg.hpp"

namespace cip {

/// FIFO ring of transitions. Entries are addressed by position in [0, size()),
/// oldest first, or by logical index (count of adds before the entry).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000000);

  void add(Transition t);
  void clear();

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  std::uint64_t total_added() const { return total_added_; }
  std::size_t synthetic_count() const { return synthetic_; }
  double synthetic_fraction() const;

  const Transition& at(std::size_t position) const;
  /// Logical index of the oldest retained entry.
  std::uint64_t first_logical() const { return total_added_ - size_; }
  const Transition& at_logical(std::uint64_t logical) const;

  /// Copy of the newest n entries (fewer if the buffer is smaller), oldest first.
  std::vector<Transition> recent(std::size_t n) const;

  /// Uniform positions with replacement.
  /// Uniform positions; synthetic entries are kept with probability
  /// `synthetic_weight` relative to real ones.
  std::vector<std::size_t> sample_positions(std::size_t batch, Rng& rng,
                                            double synthetic_weight = 1.0) const;

 private:
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // slot of the next write
  std::size_t size_ = 0;
  std::size_t synthetic_ = 0;
  std::uint64_t total_added_ = 0;
};

/// Row-stacked view of a minibatch.
struct Batch {
  Matrix s;
  Matrix a;
  Vector r;
  Matrix s_next;
  Vector done;

  Index size() const { return s.rows(); }
};

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& positions);
Batch make_batch(const std::vector<Transition>& transitions);

}  // namespace cip
