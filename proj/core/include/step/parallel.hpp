#pragma once

#include <functional>

namespace step {

/// Worker count for batch-parallel sections. Defaults to STEP_THREADS, else hardware concurrency.
int worker_count();
void set_worker_count(int n);

/// Runs body(i) for i in [begin, end) across workers. Each index runs exactly once;
/// callers must only write disjoint outputs from distinct indices.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace step
