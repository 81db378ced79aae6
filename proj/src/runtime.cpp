#include "dagma_dce/runtime.hpp"

#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dce {

void configure_allocator() {
  static std::once_flag once;
  std::call_once(once, [] {
#if defined(__GLIBC__)
    // Per-iteration N x (d*h) temporaries sit above glibc's default mmap
    // threshold; mapping and unmapping them each step costs more than the math.
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
  });
}

}  // namespace dce
