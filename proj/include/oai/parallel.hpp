#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace oai {

/// Runs fn(i) for i in [0, count) on up to `workers` threads pulling from a
/// shared counter.  Results must be written to per-index slots; the order of
/// completion is unspecified.  The exception raised for the lowest index, if
/// any, is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn)
{
    if (count == 0) return;
    workers = std::clamp<std::size_t>(workers, 1, count);
    std::vector<std::exception_ptr> errors(count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto body = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
        body();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace oai
