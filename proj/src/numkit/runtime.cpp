#include "cip/numkit/runtime.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cip {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 64 << 20);
#endif
}

}  // namespace cip
