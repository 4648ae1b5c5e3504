#pragma once

#include <cstddef>
#include <functional>

namespace qvlab {

/// Worker count hint: explicit value if nonzero, else QVLAB_THREADS, else
/// the hardware concurrency. Never influences numerical results.
unsigned resolve_threads(unsigned requested = 0);

/// Runs body(begin, end) over a static partition of [0, n). Blocks until all
/// workers finish; the first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace qvlab
