#pragma once

namespace cip {

/// Raise glibc's mmap threshold so per-step batch temporaries are recycled
/// instead of mapped and unmapped on every allocation. No-op elsewhere.
void tune_allocator();

}  // namespace cip
