#pragma once

// Declared batches for calibration and its replay.  The `calibrate`
// subcommand computes C2 and the sufficiency ratios R_max over exactly
// these instances and freezes them; the acceptance suite reruns the same
// batches against the frozen file.

#include "instance_io.hpp"

#include <array>
#include <atomic>
#include <future>
#include <vector>

namespace bfi {

struct BatchConfig {
    int n;
    double alpha;
    double p1, p2, q;
    int atoms;
    std::uint64_t seed0;
    int count;
};

// Kernel-equivalence batch: one entry per (n, alpha), 100 seeds each.
inline std::vector<BatchConfig> equivalence_batch(int count = 100) {
    std::vector<BatchConfig> out;
    std::uint64_t seed0 = 1000;
    for (auto [n, alpha] : std::vector<std::pair<int, double>>{
             {1, 0.5}, {1, 1.0}, {2, 0.5}, {2, 1.0}, {2, 2.0}}) {
        out.push_back({n, alpha, 2, 2, 2, 6, seed0, count});
        seed0 += 100000;
    }
    return out;
}

// Sufficiency-ratio batch: every (n, alpha, exponent tuple) configuration
// at atom counts 4, 8, 16; about 500 instances per configuration.
inline std::vector<BatchConfig> ratio_batch(int per_size = 167) {
    std::vector<BatchConfig> out;
    std::uint64_t seed0 = 5000000;
    for (int n : {1, 2})
        for (double alpha : {0.5, 1.0})
            for (auto [p1, p2, q] : std::vector<std::array<double, 3>>{
                     {2, 2, 2}, {1.5, 3, 3}, {2, 2, 4}})
                for (int atoms : {4, 8, 16}) {
                    out.push_back({n, alpha, p1, p2, q, atoms, seed0, per_size});
                    seed0 += 100000;
                }
    return out;
}

inline GenSpec spec_for(const BatchConfig& b, int i) {
    GenSpec g;
    g.seed = b.seed0 + static_cast<std::uint64_t>(i);
    g.n = b.n;
    g.alpha = b.alpha;
    g.p1 = b.p1;
    g.p2 = b.p2;
    g.q = b.q;
    g.atoms1 = g.atoms2 = g.atomsw = b.atoms;
    return g;
}

// Runs fn over the batch instances on `threads` workers; results land in
// index order so reductions stay deterministic.
template <typename R, typename Fn>
std::vector<R> run_batch(const BatchConfig& b, int threads, Fn fn) {
    std::vector<R> results(b.count);
    if (threads <= 1) {
        for (int i = 0; i < b.count; ++i) results[i] = fn(spec_for(b, i));
        return results;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= b.count) return;
            results[i] = fn(spec_for(b, i));
        }
    };
    std::vector<std::future<void>> futs;
    for (int t = 0; t < threads; ++t) futs.push_back(std::async(std::launch::async, worker));
    for (auto& f : futs) f.get();
    return results;
}

}  // namespace bfi
