#pragma once

#include <cstddef>
#include <functional>

namespace cryptodiv {

/// Caps the worker count used by parallel_for. 0 means hardware concurrency.
void set_max_jobs(std::size_t jobs);
std::size_t max_jobs();

/// Runs body(i) for i in [0, n). Work units must write to disjoint outputs;
/// results never depend on the number of workers. The first exception thrown
/// by any unit is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace cryptodiv
