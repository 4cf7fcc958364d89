#include "flor/instrument.hpp"

#include "flor/error.hpp"
#include "flor/logfile.hpp"
#include "flor/partition.hpp"
#include "flor/util.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>

#include <fcntl.h>
#include <unistd.h>

namespace flor {

namespace fs = std::filesystem;

const char* scan_level_name(ScanLevel level) {
    switch (level) {
        case ScanLevel::Prefix: return "prefix";
        case ScanLevel::Suffix: return "suffix";
        case ScanLevel::Validation: return "validation";
        case ScanLevel::Range: return "range";
    }
    return "?";
}

ScanSpec ScanSpec::parse(const std::string& text) {
    ScanSpec spec;
    if (text == "prefix") {
        spec.level = ScanLevel::Prefix;
        return spec;
    }
    if (text == "suffix") {
        spec.level = ScanLevel::Suffix;
        return spec;
    }
    if (text == "validation") {
        spec.level = ScanLevel::Validation;
        return spec;
    }
    if (util::starts_with(text, "range:")) {
        auto parts = util::split(text, ':');
        if (parts.size() < 3 || parts.size() > 4) fail("bad SCANSPEC '" + text + "'");
        auto lo = util::parse_int(parts[1]);
        auto hi = util::parse_int(parts[2]);
        if (!lo || !hi || *lo < 0 || *hi <= *lo) fail("bad range bounds in SCANSPEC '" + text + "'");
        spec.level = ScanLevel::Range;
        spec.lo = *lo;
        spec.hi = *hi;
        if (parts.size() == 4) {
            auto frac = util::split(parts[3], '/');
            if (frac.size() != 2) fail("bad partition in SCANSPEC '" + text + "'");
            auto i = util::parse_int(frac[0]);
            auto n = util::parse_int(frac[1]);
            if (!i || !n || *n < 1 || *i < 0 || *i >= *n)
                fail("partition must satisfy 0 <= i < n in SCANSPEC '" + text + "'");
            spec.part = {static_cast<int>(*i), static_cast<int>(*n)};
        }
        return spec;
    }
    fail("bad SCANSPEC '" + text + "' (expected prefix|suffix|validation|range:<lo>:<hi>[:<i>/<n>])");
}

std::string ScanSpec::str() const {
    switch (level) {
        case ScanLevel::Prefix: return "prefix";
        case ScanLevel::Suffix: return "suffix";
        case ScanLevel::Validation: return "validation";
        case ScanLevel::Range: {
            std::string out = "range:" + std::to_string(lo) + ":" + std::to_string(hi);
            if (part) out += ":" + std::to_string(part->first) + "/" + std::to_string(part->second);
            return out;
        }
    }
    return "?";
}

bool should_checkpoint(double since_last_ckpt, double save_estimate, long long saves_so_far,
                       double rho) {
    if (saves_so_far == 0) return true;  // seed the estimate
    return since_last_ckpt >= save_estimate / rho;
}

RunContext::RunContext(const Project& project, const std::string& filename, ExecMode mode)
    : project_(project), mode_(std::move(mode)) {
    fs::create_directories(project_.flor_dir());
    store_ = std::make_unique<Logstore>(project_.db_path());
    ckpts_ = std::make_unique<CkptStore>(CkptStore::local(project_.obj_dir()));
    start_time_ = util::now_seconds();

    header_.projid = project_.projid();
    header_.filename = filename;
    if (mode_.replay && !mode_.projid_override.empty()) header_.projid = mode_.projid_override;
    if (mode_.replay) {
        if (mode_.replay_of.empty()) {
            // latest recorded run of the same script
            std::string best;
            for (const auto& run : store_->runs())
                if (run.filename == filename) best = run.tstamp;
            if (best.empty())
                fail("replay requires a recorded run of " + filename + " in this project");
            mode_.replay_of = best;
        }
        if (!store_->has_run(header_.projid, mode_.replay_of))
            fail("original run " + mode_.replay_of + " is not in the store");
        header_.replay = true;
        header_.replay_of = mode_.replay_of;
        header_.scan = mode_.scan.str();
        header_.tstamp = util::now_tstamp();
    } else {
        std::string t = util::now_tstamp();
        if (auto latest = store_->max_tstamp(); latest && *latest >= t)
            t = util::tstamp_add_seconds(*latest, 1);
        // claim the tstamp atomically: concurrent record runs starting in
        // the same second must not share a run key
        fs::create_directories(project_.tmp_dir());
        for (;;) {
            auto claim = project_.tmp_dir() / ("run-" + t);
            int fd = ::open(claim.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) {
                ::close(fd);
                claim_path_ = claim;
                break;
            }
            t = util::tstamp_add_seconds(t, 1);
        }
        header_.tstamp = t;
    }
}

RunContext::~RunContext() {
    if (!claim_path_.empty()) {
        std::error_code ec;
        fs::remove(claim_path_, ec);
    }
}

void RunContext::emit(const std::string& name, const std::string& value, int vtype) {
    records_.push_back(RawRecord{name, value, vtype, loop_stack_});
}

void RunContext::emit_timing(const std::string& name, double seconds) {
    emit(name, util::format_double(seconds), kVtProfile);
}

void RunContext::push_frame(const std::string& loop_name, long long entries, long long iteration) {
    CtxFrame frame;
    frame.ctx_id = ++ctx_counter_;
    frame.loop_name = loop_name;
    frame.loop_entries = entries;
    frame.loop_iteration = iteration;
    loop_stack_.push_back(std::move(frame));
}

void RunContext::pop_frame() { loop_stack_.pop_back(); }

std::string RunContext::serialize_to_blob(const std::string& name, const Value& v) {
    CkptMeta meta;
    meta.key.projid = header_.projid;
    meta.key.tstamp = mode_.replay ? mode_.replay_of : header_.tstamp;
    meta.key.filename = header_.filename;
    meta.key.ctx_id = loop_stack_.empty() ? 0 : loop_stack_.back().ctx_id;
    meta.key.value_name = name;
    meta.loop_name = loop_stack_.empty() ? "" : loop_stack_.back().loop_name;
    meta.iteration = loop_stack_.empty() ? -1 : loop_stack_.back().loop_iteration;
    return ckpts_->put(meta, v.capture_state(), /*record_mode=*/false);
}

Value RunContext::log(const std::string& name, Value v) {
    if (name.empty()) fail("log requires a non-empty name");
    switch (v.kind()) {
        case ValueKind::Int:
        case ValueKind::Float:
        case ValueKind::Bool:
        case ValueKind::Str:
        case ValueKind::Null: emit(name, v.repr(), kVtMetric); break;
        default:
            if (v.serializable())
                emit(name, serialize_to_blob(name, v), kVtBlobRef);
            else
                emit(name, v.repr(), kVtMetric);  // textual repr; never aborts the run
    }
    return v;
}

namespace {

Value coerce_arg(const std::string& name, const std::string& text, const Value& default_value) {
    switch (default_value.kind()) {
        case ValueKind::Int: {
            auto v = util::parse_int(text);
            if (!v) fail("cannot parse '" + text + "' as int for arg " + name);
            return Value::integer(*v);
        }
        case ValueKind::Float: {
            auto v = util::parse_double(text);
            if (!v) fail("cannot parse '" + text + "' as float for arg " + name);
            return Value::real(*v);
        }
        case ValueKind::Bool: {
            std::string low;
            for (char c : text) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (low == "true" || low == "1") return Value::boolean(true);
            if (low == "false" || low == "0") return Value::boolean(false);
            fail("cannot parse '" + text + "' as bool for arg " + name);
        }
        case ValueKind::Str: return Value::str(text);
        default: fail("arg default for " + name + " must be int, float, bool or text");
    }
}

}  // namespace

Value RunContext::arg(const std::string& name, const Value& default_value) {
    if (default_value.kind() != ValueKind::Int && default_value.kind() != ValueKind::Float &&
        default_value.kind() != ValueKind::Bool && default_value.kind() != ValueKind::Str)
        fail("arg default for " + name + " must be int, float, bool or text");

    Value out;
    if (mode_.replay) {
        // replay uses the configuration values originally logged
        auto it = mode_.kwargs.find(name);
        if (it != mode_.kwargs.end()) {
            out = coerce_arg(name, it->second, default_value);
        } else {
            auto rows = store_->db().query(
                "SELECT value FROM logs WHERE projid = ? AND tstamp = ? AND value_name = ?"
                " AND value_type = ? LIMIT 1",
                {header_.projid, mode_.replay_of, name, static_cast<long long>(kVtHyperparam)});
            if (rows.empty()) fail("unknown arg in history: " + name);
            out = coerce_arg(name, rows[0].as_text(0), default_value);
        }
    } else {
        auto it = mode_.kwargs.find(name);
        out = (it != mode_.kwargs.end()) ? coerce_arg(name, it->second, default_value)
                                         : default_value;
    }
    emit(name, out.repr(), kVtHyperparam);
    return out;
}

void RunContext::checkpointing_enter(std::vector<CkptObject> objects) {
    if (scope_active_) fail("nested checkpointing scopes are not supported");
    if (outer_seen_) fail("checkpointing must be entered before the outermost named loop");
    for (const auto& obj : objects) {
        Value v = obj.get();
        if (!v.serializable())
            fail("object '" + obj.name + "' does not support state capture/restore");
    }
    registered_ = std::move(objects);
    scope_active_ = true;
}

void RunContext::checkpointing_exit() {
    scope_active_ = false;
    registered_.clear();
}

long long RunContext::original_outer_entries(const std::string& loop_name) {
    auto rows = store_->db().query(
        "SELECT loop_entries FROM loops WHERE projid = ? AND tstamp = ?"
        " AND parent_ctx_id IS NULL AND loop_name = ? LIMIT 1",
        {header_.projid, mode_.replay_of, loop_name});
    if (rows.empty()) return -1;
    return rows[0].as_int(0);
}

double RunContext::load_checkpoint_set(long long iteration) {
    auto entries =
        ckpts_->entries_at(header_.projid, mode_.replay_of, iteration);
    double t0 = util::now_seconds();
    for (auto& obj : registered_) {
        const CkptMeta* found = nullptr;
        for (const auto& m : entries)
            if (m.key.value_name == obj.name) found = &m;
        if (!found)
            fail("missing checkpoint for ctx: object '" + obj.name +
                 "' is not in the checkpoint set at iteration " + std::to_string(iteration));
        obj.set(Value::restore_state(ckpts_->get_blob(found->key)));
    }
    return util::now_seconds() - t0;
}

void RunContext::maybe_checkpoint_boundary(long long iteration) {
    if (registered_.empty()) return;
    double now = util::now_seconds();
    bool is_final = outer_driver_ && outer_driver_->next_index_ >= outer_driver_->end_index_;
    // the final boundary always serializes so suffix scans can restore end state
    if (!is_final && !should_checkpoint(now - last_ckpt_mark_, save_estimate_, saves_count_))
        return;
    double t0 = util::now_seconds();
    for (auto& obj : registered_) {
        CkptMeta meta;
        meta.key.projid = header_.projid;
        meta.key.tstamp = header_.tstamp;
        meta.key.filename = header_.filename;
        meta.key.ctx_id = loop_stack_.back().ctx_id;
        meta.key.value_name = obj.name;
        meta.loop_name = loop_stack_.back().loop_name;
        meta.iteration = iteration;
        ckpts_->put(meta, obj.get().capture_state(), /*record_mode=*/true);
    }
    double secs = util::now_seconds() - t0;
    emit_timing(kDeltaCkptSave, secs);
    save_estimate_ = (save_estimate_ * static_cast<double>(saves_count_) + secs) /
                     static_cast<double>(saves_count_ + 1);
    ++saves_count_;
    last_ckpt_mark_ = util::now_seconds();
}

std::unique_ptr<RunContext::LoopDriver> RunContext::loop(const std::string& name,
                                                         std::vector<Value> items) {
    return std::make_unique<LoopDriver>(*this, name, std::move(items));
}

RunContext::LoopDriver::LoopDriver(RunContext& run, std::string name, std::vector<Value> items)
    : run_(run), name_(std::move(name)), items_(std::move(items)) {
    if (name_.empty()) fail("loop requires a non-empty name");
    for (const auto& f : run_.loop_stack_)
        if (f.loop_name == name_) fail("loop name '" + name_ + "' is already active");
    if (!run_.outer_seen_ && run_.loop_stack_.empty()) {
        role_ = Role::Outer;
        run_.outer_seen_ = true;
        run_.outer_driver_ = this;
    } else if (!run_.loop_stack_.empty()) {
        role_ = Role::Nested;
    } else {
        role_ = Role::Plain;
    }
    end_index_ = static_cast<long long>(items_.size());
}

RunContext::LoopDriver::~LoopDriver() {
    if (frame_active_) {
        run_.pop_frame();
        frame_active_ = false;
    }
    if (run_.outer_driver_ == this) run_.outer_driver_ = nullptr;
}

void RunContext::LoopDriver::begin() {
    started_ = true;
    double now = util::now_seconds();
    if (role_ == Role::Outer) {
        if (!run_.prefix_emitted_) {
            if (!run_.replay()) run_.emit_timing(kDeltaPrefix, now - run_.start_time_);
            run_.prefix_emitted_ = true;
        }
        run_.last_ckpt_mark_ = now;
        if (run_.replay()) {
            long long hist_entries = run_.original_outer_entries(name_);
            if (hist_entries >= 0 && hist_entries != static_cast<long long>(items_.size()))
                fail("outer loop '" + name_ + "' has " + std::to_string(items_.size()) +
                     " entries but history recorded " + std::to_string(hist_entries));
            const auto& spec = run_.mode_.scan;
            const std::string& projid = run_.header_.projid;
            const std::string& orig = run_.mode_.replay_of;
            long long total = static_cast<long long>(items_.size());
            switch (spec.level) {
                case ScanLevel::Prefix: throw PrefixExit{};
                case ScanLevel::Suffix: {
                    auto latest = run_.ckpts_->latest_iteration(projid, orig);
                    if (latest) {
                        double secs = run_.load_checkpoint_set(*latest);
                        run_.emit_timing(kDeltaCkptLoad, secs);
                        run_.state_cur_ = *latest;
                        next_index_ = *latest + 1;
                    } else {
                        next_index_ = 0;  // no checkpoints: degrade to re-execution
                    }
                    break;
                }
                case ScanLevel::Validation:
                    next_index_ = 0;
                    break;
                case ScanLevel::Range: {
                    long long lo = spec.lo;
                    long long hi = spec.hi < 0 ? total : spec.hi;
                    if (!(0 <= lo && lo < hi && hi <= total))
                        fail("range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             ") is outside the loop span of " + std::to_string(total));
                    std::vector<long long> ckpt_iters;
                    for (const auto& [iter, e] : run_.ckpts_->by_iteration(projid, orig))
                        ckpt_iters.push_back(iter);
                    std::optional<long long> start_ckpt;
                    long long b = hi;
                    if (spec.part) {
                        auto iter_secs = [&] {
                            std::map<long long, double> out;
                            auto rows = run_.store_->db().query(
                                "SELECT l.loop_iteration, g.value FROM logs g JOIN loops l"
                                " ON g.ctx_id = l.ctx_id WHERE g.projid = ? AND g.tstamp = ?"
                                " AND g.value_name = ? AND l.parent_ctx_id IS NULL",
                                {projid, orig, delta_name(name_)});
                            for (const auto& row : rows)
                                if (auto v = util::parse_double(row.as_text(1)))
                                    out[row.as_int(0)] = *v;
                            return out;
                        }();
                        auto subs = partition_range(lo, hi, spec.part->second, ckpt_iters, iter_secs);
                        int idx = spec.part->first;
                        if (idx >= static_cast<int>(subs.size()))
                            fail("partition " + std::to_string(idx) + "/" +
                                 std::to_string(spec.part->second) + " exceeds the " +
                                 std::to_string(subs.size()) + " feasible sub-ranges");
                        b = subs[idx].hi;
                        next_index_ = subs[idx].resume;
                        start_ckpt = subs[idx].start_ckpt;
                    } else {
                        auto c = run_.ckpts_->nearest_before(projid, orig, lo);
                        start_ckpt = c;
                        next_index_ = c ? *c + 1 : 0;
                    }
                    end_index_ = b;
                    if (start_ckpt) {
                        double secs = run_.load_checkpoint_set(*start_ckpt);
                        run_.emit_timing(kDeltaCkptLoad, secs);
                        run_.state_cur_ = *start_ckpt;
                    }
                    break;
                }
            }
        }
    } else if (role_ == Role::Nested && run_.replay()) {
        const auto& spec = run_.mode_.scan;
        if (spec.level == ScanLevel::Validation) {
            long long outer_iter = run_.loop_stack_.front().loop_iteration;
            if (run_.loaded_for_iter_ == outer_iter) {
                next_index_ = end_index_;  // already restored; yield nothing
            } else {
                auto grouped = run_.ckpts_->by_iteration(run_.header_.projid, run_.mode_.replay_of);
                if (grouped.count(outer_iter)) {
                    double secs = run_.load_checkpoint_set(outer_iter);
                    run_.emit_timing(kDeltaCkptLoad, secs);
                    run_.loaded_for_iter_ = outer_iter;
                    run_.state_cur_ = outer_iter;
                    next_index_ = end_index_;  // skip the nested loop
                } else if (run_.state_cur_ == outer_iter - 1) {
                    next_index_ = 0;  // no checkpoint: catch up by executing
                } else {
                    fail("missing checkpoint for ctx: iteration " + std::to_string(outer_iter) +
                         " has no checkpoint and state is not current");
                }
            }
        }
        // Suffix (degraded) and Range iterations execute nested loops fully.
    }
    iter_start_ = util::now_seconds();
}

void RunContext::LoopDriver::finish_iteration() {
    if (!frame_active_) return;
    double secs = util::now_seconds() - iter_start_;
    long long completed = run_.loop_stack_.back().loop_iteration;
    if (!run_.replay()) run_.emit_timing(delta_name(name_), secs);
    if (role_ == Role::Outer) {
        if (!run_.replay()) run_.maybe_checkpoint_boundary(completed);
        run_.state_cur_ = completed;
    }
    run_.pop_frame();
    frame_active_ = false;
}

void RunContext::LoopDriver::close() {
    if (done_) return;
    done_ = true;
    if (role_ == Role::Outer) {
        run_.outer_done_ = true;
        run_.outer_exit_time_ = util::now_seconds();
        run_.outer_driver_ = nullptr;
    }
    if (run_.replay() && !items_.empty()) {
        // post-loop statements observe the same binding a full run leaves
        final_binding_ = end_index_ > 0 ? items_[static_cast<size_t>(end_index_ - 1)]
                                        : items_.back();
    }
}

std::optional<Value> RunContext::LoopDriver::next() {
    if (!started_)
        begin();
    else
        finish_iteration();
    if (next_index_ >= end_index_) {
        close();
        return std::nullopt;
    }
    run_.push_frame(name_, static_cast<long long>(items_.size()), next_index_);
    frame_active_ = true;
    iter_start_ = util::now_seconds();
    Value v = items_[static_cast<size_t>(next_index_)];
    ++next_index_;
    return v;
}

std::filesystem::path RunContext::finalize(bool ok) {
    if (finalized_) {
        return mode_.replay ? replay_out_
                            : project_.log_dir() / (header_.tstamp + ".json");
    }
    double now = util::now_seconds();
    if (!mode_.replay) {
        if (!prefix_emitted_) emit_timing(kDeltaPrefix, now - start_time_);
        if (outer_exit_time_ >= 0) emit_timing(kDeltaSuffix, now - outer_exit_time_);
    }
    header_.status = ok ? "ok" : "failed";
    emit(kStatusName, header_.status, kVtStatus);

    RunLog runlog{header_, records_};
    fs::path path;
    if (mode_.replay) {
        path = replay_out_.empty() ? fs::current_path() / "flor_replay.json" : replay_out_;
        write_logfile(runlog, path);
    } else {
        util::FileLock lock(project_.lock_path());
        path = project_.log_dir() / (header_.tstamp + ".json");
        write_logfile(runlog, path);
        ShadowRepo repo(project_.root);
        repo.autocommit(header_.projid, header_.tstamp,
                        fs::path(".flor") / "log" / (header_.tstamp + ".json"));
        auto counts = store_->unpack(runlog);
        if (counts.skipped)
            std::cerr << "notice: run " << header_.tstamp
                      << " is already in the store; unpack skipped\n";
    }
    finalized_ = true;
    return path;
}

}  // namespace flor
