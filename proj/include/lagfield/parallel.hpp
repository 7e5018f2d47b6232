#pragma once

#include <functional>

namespace lagfield {

/// Runs body(k) for k in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; results must be written to per-index slots so the
/// outcome does not depend on scheduling. threads <= 1 runs inline.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace lagfield
