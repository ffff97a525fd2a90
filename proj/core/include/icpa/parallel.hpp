#pragma once

#include <cstddef>
#include <functional>

namespace icpa {

/// Worker count: ICPA_THREADS if set and positive, else hardware concurrency.
std::size_t thread_budget();

/// Runs fn(chunk) for chunk in [0, chunks). Chunks are independent; callers
/// reduce per-chunk results in chunk order so output never depends on the
/// worker count.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn);

}  // namespace icpa
