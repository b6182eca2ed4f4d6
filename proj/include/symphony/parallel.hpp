// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace symphony {

// Process-wide worker cap. 1 by default; raised by the --threads flag or the
// SYMPHONY_THREADS environment variable. Never affects results: work items
// write to per-index slots and reductions happen sequentially afterwards.
int thread_budget();
void set_thread_budget(int n);

// Runs fn(i) for i in [0, n). With budget > 1 the index range is split across
// workers; fn must only touch state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace symphony
