#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace kpo {

/// Runs fn(i) or fn(i, worker) for i in [0, count) on up to `workers`
/// threads. Work items are handed out dynamically; the first exception thrown
/// is rethrown after all threads join. workers <= 1 runs inline.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (count <= 0) return;
    auto call = [&](int i, int wk) {
        if constexpr (std::is_invocable_v<Fn&, int, int>) fn(i, wk);
        else fn(i);
    };
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) call(i, 0);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto body = [&](int wk) {
        for (int i = next++; i < count; i = next++) {
            try {
                call(i, wk);
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!err) err = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline int hardware_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace kpo
