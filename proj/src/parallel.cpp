// SPDX-License-Identifier: Apache-2.0
#include "symphony/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace symphony {

namespace {

std::atomic<int> g_budget{0}; // 0 = not yet initialized

int initial_budget() {
    if (const char* env = std::getenv("SYMPHONY_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

} // namespace

int thread_budget() {
    int b = g_budget.load(std::memory_order_relaxed);
    if (b == 0) {
        b = initial_budget();
        g_budget.store(b, std::memory_order_relaxed);
    }
    return b;
}

void set_thread_budget(int n) {
    g_budget.store(n >= 1 ? n : 1, std::memory_order_relaxed);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = thread_budget();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<std::size_t>(workers, n));
    pool.reserve(count);
    for (int t = 0; t < count - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace symphony
