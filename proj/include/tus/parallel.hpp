#pragma once

#include <functional>

namespace tus {

/// Worker count: set_thread_count() if called with n > 0, else TUS_THREADS,
/// else the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on up to thread_count() threads. If bodies
/// throw, the exception from the lowest index is rethrown after all workers
/// finish.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace tus
