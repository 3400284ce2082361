#pragma once

// Deterministic replica parallelism: replica r always maps to the same seed
// stream, worker w handles replicas w, w+W, w+2W, ... and results land in
// per-replica slots, so the worker count cannot change any output.

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace wns {

inline void parallel_replicas(int reps, int workers, const std::function<void(int)>& body) {
    if (workers <= 1 || reps <= 1) {
        for (int r = 0; r < reps; ++r) body(r);
        return;
    }
    const int nw = std::min(workers, reps);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nw));
    pool.reserve(std::size_t(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int r = w; r < reps; r += nw) body(r);
            } catch (...) {
                errs[std::size_t(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace wns
