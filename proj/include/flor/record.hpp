#pragma once

#include <optional>
#include <string>
#include <vector>

namespace flor {

// value_type codes for the logs table.
inline constexpr int kVtMetric = 1;
inline constexpr int kVtHyperparam = 2;
inline constexpr int kVtBlobRef = 3;
inline constexpr int kVtProfile = 4;
inline constexpr int kVtStatus = 5;

// Reserved value_name namespace for profile timings and run status.
inline const std::string kDeltaPrefix = "flor::delta::prefix";
inline const std::string kDeltaSuffix = "flor::delta::suffix";
inline const std::string kDeltaCkptSave = "flor::delta::ckpt_save";
inline const std::string kDeltaCkptLoad = "flor::delta::ckpt_load";
inline const std::string kDeltaNs = "flor::delta::";
inline const std::string kStatusName = "flor::status";

inline std::string delta_name(const std::string& loop_name) { return kDeltaNs + loop_name; }
inline bool is_reserved_name(const std::string& n) {
    return n.rfind(kDeltaNs, 0) == 0 || n == kStatusName;
}

// One level of the loop-context chain, outermost first.
struct CtxFrame {
    long long ctx_id = 0;  // run-local id; remapped to a global id at unpack
    std::string loop_name;
    long long loop_entries = 0;
    long long loop_iteration = 0;

    bool operator==(const CtxFrame&) const = default;
};

struct RawRecord {
    std::string value_name;
    std::string value;
    int value_type = kVtMetric;
    std::vector<CtxFrame> ctx;  // empty = top level

    bool operator==(const RawRecord&) const = default;
};

struct RunHeader {
    std::string projid;
    std::string tstamp;
    std::string filename;
    bool replay = false;
    std::string status = "ok";     // ok | failed
    std::string replay_of;         // original tstamp, replay only
    std::string scan;              // SCANSPEC text, replay only
};

struct RunLog {
    RunHeader header;
    std::vector<RawRecord> records;
};

// Structural identity of a chain, independent of ctx_id allocation.
std::string chain_key(const std::vector<CtxFrame>& ctx);

}  // namespace flor
