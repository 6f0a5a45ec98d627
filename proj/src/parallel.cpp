// SPDX-License-Identifier: Apache-2.0
#include "spdelab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spdelab {

namespace {
std::atomic<int> g_threads{0};
thread_local bool t_inside = false;   // nested calls run inline
}  // namespace

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int threads() {
    int n = g_threads.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    int nt = t_inside ? 1 : std::min<std::size_t>(threads(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t chunk = std::max<std::size_t>(1, n / (std::size_t(nt) * 8));
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        t_inside = true;
        try {
            for (;;) {
                std::size_t lo = next.fetch_add(chunk);
                if (lo >= n) break;
                std::size_t hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
            next.store(n);
        }
        t_inside = false;
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace spdelab
