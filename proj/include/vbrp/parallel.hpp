#pragma once

#include <functional>

namespace vbrp {

/// Upper bound on worker threads used inside library calls; 0 means hardware concurrency.
void set_thread_limit(unsigned n);
unsigned thread_limit();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker; the
/// first exception thrown is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace vbrp
