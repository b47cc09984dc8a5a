#pragma once

#include <functional>

namespace gpo {

/// Runs fn(0..n-1) on up to hardware_concurrency threads and joins. The first
/// exception thrown by any task is rethrown after all tasks finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace gpo
