#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace vmlab {

// Static block partition over [0, n). Each index is processed by exactly one
// thread and writes only its own slot, so results do not depend on the thread
// count; reductions stay inside a single index. The lowest-indexed exception
// wins when workers throw.
template <class Fn>
void parallel_for(std::size_t n, const Fn& fn, int threads) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&, w]() {
            try {
                std::size_t lo = n * w / t, hi = n * (w + 1) / t;
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace vmlab
