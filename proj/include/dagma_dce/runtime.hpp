#pragma once

namespace dce {

// Raises glibc's mmap and trim thresholds once per process. No-op elsewhere.
// Called by the fit entry points.
void configure_allocator();

}  // namespace dce
