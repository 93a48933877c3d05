#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gpcc {

// Static block partition over [0, n). Each worker writes only to slots it
// owns, so results are identical to a serial loop regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t max_threads = 0) {
    if (n == 0) return;
    std::size_t hw = max_threads ? max_threads : std::thread::hardware_concurrency();
    hw = std::max<std::size_t>(1, std::min(hw, n));
    if (hw == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t chunk = (n + hw - 1) / hw;
    for (std::size_t t = 0; t < hw; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gpcc
