#pragma once

#include "flor/ckptstore.hpp"
#include "flor/logstore.hpp"
#include "flor/project.hpp"
#include "flor/record.hpp"
#include "flor/value.hpp"
#include "flor/vcs.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace flor {

enum class ScanLevel { Prefix, Suffix, Validation, Range };

const char* scan_level_name(ScanLevel level);

// SCANSPEC: prefix | suffix | validation | range:<lo>:<hi>[:<i>/<n>]
struct ScanSpec {
    ScanLevel level = ScanLevel::Range;
    long long lo = 0;
    long long hi = -1;  // -1 = full span of the outermost loop
    std::optional<std::pair<int, int>> part;

    static ScanSpec parse(const std::string& text);
    std::string str() const;
};

struct ExecMode {
    bool replay = false;
    ScanSpec scan;                              // replay only
    std::map<std::string, std::string> kwargs;  // --kwargs overrides
    std::string replay_of;                      // original run tstamp (replay)
    std::string projid_override;                // original run's projid (replay; the
                                                // project directory may have been renamed)
};

// Thrown when a prefix scan reaches the outermost loop; the caller
// finalizes the run and exits cleanly.
struct PrefixExit {};

// Pure decision for the adaptive checkpoint policy: serialize at a boundary
// iff the time covered since the last checkpoint is at least the estimated
// serialization cost divided by rho (first boundary always serializes).
bool should_checkpoint(double since_last_ckpt, double save_estimate, long long saves_so_far,
                       double rho = 0.25);

// Per-process run state: exactly one per execution. Owns the log buffer,
// the loop stack, profile timings, and the replay scan machinery.
class RunContext {
public:
    using Getter = std::function<Value()>;
    using Setter = std::function<void(Value)>;

    RunContext(const Project& project, const std::string& filename, ExecMode mode);
    ~RunContext();
    RunContext(const RunContext&) = delete;
    RunContext& operator=(const RunContext&) = delete;

    bool replay() const { return mode_.replay; }
    const ScanSpec& scan() const { return mode_.scan; }
    const RunHeader& header() const { return header_; }

    Value log(const std::string& name, Value v);
    Value arg(const std::string& name, const Value& default_value);

    struct CkptObject {
        std::string name;
        Getter get;
        Setter set;
    };
    void checkpointing_enter(std::vector<CkptObject> objects);
    void checkpointing_exit();

    // Drives one for-statement over loop(name, items). All scan semantics
    // live here; the interpreter just pulls values.
    class LoopDriver {
    public:
        LoopDriver(RunContext& run, std::string name, std::vector<Value> items);
        ~LoopDriver();
        std::optional<Value> next();
        // Binding for the loop variable after a skipped loop, so post-loop
        // statements observe the same value a full execution leaves behind.
        std::optional<Value> final_binding() const { return final_binding_; }

    private:
        enum class Role { Outer, Nested, Plain };
        RunContext& run_;
        std::string name_;
        std::vector<Value> items_;
        Role role_;
        bool started_ = false;
        bool frame_active_ = false;
        bool done_ = false;
        long long next_index_ = 0;
        long long end_index_ = 0;  // iterate while next_index_ < end_index_
        double iter_start_ = 0;
        std::optional<Value> final_binding_;

        void begin();
        void finish_iteration();
        void close();
        friend class RunContext;
    };
    std::unique_ptr<LoopDriver> loop(const std::string& name, std::vector<Value> items);

    // Flushes the logfile; in record mode also auto-commits and unpacks.
    // Safe to call once; returns the logfile path.
    std::filesystem::path finalize(bool ok);
    bool finalized() const { return finalized_; }

    const std::vector<RawRecord>& records() const { return records_; }
    const Project& project() const { return project_; }

    // Replay logfile destination (replay mode), settable before finalize.
    void set_replay_out(const std::filesystem::path& p) { replay_out_ = p; }

private:
    Project project_;
    ExecMode mode_;
    RunHeader header_;
    std::unique_ptr<Logstore> store_;
    std::unique_ptr<CkptStore> ckpts_;
    std::vector<RawRecord> records_;
    std::vector<CtxFrame> loop_stack_;
    long long ctx_counter_ = 0;
    bool finalized_ = false;
    std::filesystem::path replay_out_;
    std::filesystem::path claim_path_;  // record mode: the claimed-tstamp marker

    // checkpoint scope
    std::vector<CkptObject> registered_;
    bool scope_active_ = false;

    // outermost-loop bookkeeping
    bool outer_seen_ = false;
    bool outer_done_ = false;
    LoopDriver* outer_driver_ = nullptr;

    // profile
    double start_time_ = 0;
    bool prefix_emitted_ = false;
    double outer_exit_time_ = -1;

    // adaptive checkpoint policy state
    double last_ckpt_mark_ = 0;
    double save_estimate_ = 0;
    long long saves_count_ = 0;

    // replay state
    long long state_cur_ = -1;      // iteration whose end-state the objects hold
    long long loaded_for_iter_ = -1;  // validation: outer iteration already restored

    void emit(const std::string& name, const std::string& value, int vtype);
    void emit_timing(const std::string& name, double seconds);
    void push_frame(const std::string& loop_name, long long entries, long long iteration);
    void pop_frame();
    void maybe_checkpoint_boundary(long long iteration);
    double load_checkpoint_set(long long iteration);  // returns seconds
    long long original_outer_entries(const std::string& loop_name);
    std::string serialize_to_blob(const std::string& name, const Value& v);

    friend class LoopDriver;
};

}  // namespace flor
