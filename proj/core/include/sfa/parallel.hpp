#pragma once

#include <functional>

namespace sfa {

// Worker count: SFA_THREADS if set and positive, otherwise the hardware
// concurrency (SFA_THREADS=0 also means auto).
int thread_budget();

// Runs fn(0..n_tasks-1) over a small thread pool.  Tasks must write to
// disjoint slots; the first exception thrown by any task is rethrown after
// all workers join.  Results are deterministic as long as tasks are.
void parallel_for(int n_tasks, const std::function<void(int)>& fn);

}  // namespace sfa
