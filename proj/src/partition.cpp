#include "flor/partition.hpp"

#include "flor/error.hpp"

#include <algorithm>

namespace flor {

std::vector<SubRange> partition_range(long long lo, long long hi, int n,
                                      const std::vector<long long>& ckpt_iters,
                                      const std::map<long long, double>& iter_seconds) {
    if (!(0 <= lo && lo < hi)) fail("bad range [" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
    if (n < 1) fail("worker count must be >= 1");

    std::vector<long long> ckpts(ckpt_iters);
    std::sort(ckpts.begin(), ckpts.end());
    ckpts.erase(std::unique(ckpts.begin(), ckpts.end()), ckpts.end());

    auto nearest_below = [&](long long k) -> std::optional<long long> {
        std::optional<long long> best;
        for (long long c : ckpts)
            if (c < k) best = c;
        return best;
    };
    auto weight = [&](long long k) {
        auto it = iter_seconds.find(k);
        return it == iter_seconds.end() ? 1.0 : it->second;
    };

    // boundaries a sub-range may start at: lo itself, or c+1 for a checkpoint c
    std::vector<long long> bounds{lo};
    for (long long c : ckpts) {
        long long b = c + 1;
        if (b > lo && b < hi) bounds.push_back(b);
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    bounds.push_back(hi);

    int max_workers = static_cast<int>(bounds.size()) - 1;
    int workers = std::min(n, max_workers);  // n clamps down to available boundaries
    bool warned = workers < n && workers == 1;

    auto first_resume = [&]() {
        auto c = nearest_below(lo);
        return c ? *c + 1 : 0;
    };
    auto seg_cost = [&](long long a, long long b) {
        long long start = (a == lo) ? first_resume() : a;
        double total = 0;
        for (long long k = start; k < b; ++k) total += weight(k);
        return total;
    };

    // min-makespan over contiguous segmentations at the allowed boundaries
    std::vector<double> cands;
    for (size_t i = 0; i + 1 < bounds.size(); ++i)
        for (size_t j = i + 1; j < bounds.size(); ++j) cands.push_back(seg_cost(bounds[i], bounds[j]));
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    auto feasible = [&](double cap) {
        size_t i = 0;
        int used = 0;
        while (i + 1 < bounds.size()) {
            size_t j = i + 1;
            size_t reach = i;
            while (j < bounds.size() && seg_cost(bounds[i], bounds[j]) <= cap + 1e-12) reach = j++;
            if (reach == i) return false;
            i = reach;
            if (++used > workers) return false;
        }
        return true;
    };
    double cap = cands.empty() ? 0.0 : cands.back();
    {
        size_t l = 0, r = cands.size() ? cands.size() - 1 : 0;
        while (l <= r && !cands.empty()) {
            size_t mid = (l + r) / 2;
            if (feasible(cands[mid])) {
                cap = cands[mid];
                if (mid == 0) break;
                r = mid - 1;
            } else {
                l = mid + 1;
            }
        }
    }

    // earliest feasible endpoints give a deterministic optimal segmentation
    std::vector<SubRange> out;
    size_t i = 0;
    int remaining = workers;
    while (i + 1 < bounds.size()) {
        size_t chosen = 0;
        for (size_t j = i + 1; j < bounds.size(); ++j) {
            if (seg_cost(bounds[i], bounds[j]) > cap + 1e-12) break;
            // suffix must be coverable by the remaining workers
            size_t k = j;
            int used = 0;
            bool ok = true;
            while (k + 1 < bounds.size()) {
                size_t reach = k;
                for (size_t m = k + 1; m < bounds.size(); ++m)
                    if (seg_cost(bounds[k], bounds[m]) <= cap + 1e-12) reach = m;
                if (reach == k) {
                    ok = false;
                    break;
                }
                k = reach;
                ++used;
            }
            if (ok && used <= remaining - 1) {
                chosen = j;
                break;
            }
        }
        if (chosen == 0) {  // fall back to maximal reach
            chosen = i + 1;
            for (size_t j = i + 1; j < bounds.size(); ++j)
                if (seg_cost(bounds[i], bounds[j]) <= cap + 1e-12) chosen = j;
        }
        SubRange sr;
        sr.lo = bounds[i];
        sr.hi = bounds[chosen];
        if (sr.lo == lo) {
            auto c = nearest_below(lo);
            sr.start_ckpt = c;
            sr.resume = c ? *c + 1 : 0;
        } else {
            sr.start_ckpt = sr.lo - 1;
            sr.resume = sr.lo;
        }
        sr.warned_single = warned;
        out.push_back(sr);
        i = chosen;
        --remaining;
    }
    return out;
}

}  // namespace flor
