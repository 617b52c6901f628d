#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace h2s {

/// Worker count: hardware concurrency capped by the H2S_THREADS env var.
inline unsigned thread_budget() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("H2S_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
    }
    return n;
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

/// Run fn(i) for i in [0, count). Results must be written by index so the
/// outcome is identical to sequential execution regardless of scheduling.
/// Nested calls run sequentially.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = thread_budget();
    if (workers <= 1 || count <= 1 || detail::inside_parallel_region) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    for (unsigned w = 0; w < used; ++w) {
        pool.emplace_back([&, w]() {
            detail::inside_parallel_region = true;
            try {
                for (std::size_t i = w; i < count; i += used) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace h2s
