#include "cip/numkit/error.hpp"

namespace cip {

void Diagnostics::record(std::string kind, std::string detail) {
  ++counts_[kind];
  if (events_.size() < kMaxStoredEvents) {
    events_.push_back({std::move(kind), std::move(detail)});
  }
}

std::int64_t Diagnostics::count(const std::string& kind) const {
  auto it = counts_.find(kind);
  return it == counts_.end() ? 0 : it->second;
}

}  // namespace cip
