#pragma once

#include <cstddef>
#include <functional>

namespace dpcr {

// Number of worker threads: DPCR_THREADS when set, else the hardware count.
unsigned thread_budget();

// Index-parallel loop; results must be written to per-index slots so the
// outcome does not depend on the schedule.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace dpcr
