#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

struct SubRange {
    long long lo = 0, hi = 0;                 // assigned iterations [lo, hi)
    long long resume = 0;                     // first iteration actually executed
    std::optional<long long> start_ckpt;      // checkpoint restored first, if any
    bool warned_single = false;               // n collapsed to 1 for lack of checkpoints
};

// Balanced contiguous sub-ranges of [lo, hi) aligned to checkpoint
// boundaries; union covers [lo, hi), pairwise disjoint, each sub-range
// starts at a checkpointed boundary or at the range start. Size <= n.
// iter_seconds weights the balance; missing iterations weigh 1.
std::vector<SubRange> partition_range(long long lo, long long hi, int n,
                                      const std::vector<long long>& ckpt_iters,
                                      const std::map<long long, double>& iter_seconds = {});

}  // namespace flor
