#pragma once

#include <cstddef>
#include <functional>

namespace privlens {

/// Worker count honoured by every internal parallel loop. Reads the
/// PRIVLENS_THREADS environment variable once; defaults to the hardware
/// concurrency.
int thread_budget();

/// Overrides thread_budget() for the rest of the process (0 restores the
/// environment default).
void set_thread_budget(int threads);

/// Runs body(i) for i in [0, count). Each index is visited exactly once;
/// callers must write results by index so that the outcome is independent
/// of scheduling. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace privlens
