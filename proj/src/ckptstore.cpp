#include "flor/ckptstore.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <tuple>

#include <fcntl.h>
#include <unistd.h>

namespace flor {

using nlohmann::json;
namespace fs = std::filesystem;

std::string CkptKey::id() const {
    return util::stable_hash(projid + '\x1f' + tstamp + '\x1f' + filename + '\x1f' +
                             std::to_string(ctx_id) + '\x1f' + value_name);
}

LocalDirBackend::LocalDirBackend(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

void LocalDirBackend::put(const std::string& name, const std::string& bytes) {
    // checkpoints must be durable before the boundary counts as committed
    auto path = dir_ / name;
    int fd = ::open(path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    if (fd < 0) fail("cannot write " + path.string());
    size_t off = 0;
    while (off < bytes.size()) {
        ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
        if (n <= 0) {
            ::close(fd);
            fail("write failed: " + path.string());
        }
        off += static_cast<size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

std::optional<std::string> LocalDirBackend::get(const std::string& name) {
    auto p = dir_ / name;
    if (!fs::exists(p)) return std::nullopt;
    return util::read_file(p);
}

void LocalDirBackend::del(const std::string& name) {
    std::error_code ec;
    fs::remove(dir_ / name, ec);
}

std::vector<std::string> LocalDirBackend::list() {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir_))
        if (e.is_regular_file()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<long long> retain_evenly(std::vector<long long> iterations, long long keep) {
    std::sort(iterations.begin(), iterations.end());
    iterations.erase(std::unique(iterations.begin(), iterations.end()), iterations.end());
    if (keep < 2) fail("retention requires keep_per_run >= 2");
    long long n = static_cast<long long>(iterations.size());
    if (n <= keep) return iterations;

    const long long last = iterations.back();
    auto max_reach = [&](long long from, long long gap) {
        // largest iteration <= from + gap
        auto it = std::upper_bound(iterations.begin(), iterations.end(), from + gap);
        if (it == iterations.begin()) return from;  // nothing reachable
        return *std::prev(it);
    };
    auto feasible = [&](long long gap) {
        long long cur = -1;
        long long picks = 0;
        while (picks < keep) {
            long long next = max_reach(cur, gap);
            if (next <= cur) return false;
            cur = next;
            ++picks;
            if (cur == last) return true;
        }
        return false;
    };

    // candidate gaps: all pairwise distances incl. from the pre-loop state
    std::vector<long long> cands;
    for (long long x : iterations) cands.push_back(x + 1);
    for (size_t i = 0; i < iterations.size(); ++i)
        for (size_t j = i + 1; j < iterations.size(); ++j)
            cands.push_back(iterations[j] - iterations[i]);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    long long best_gap = -1;
    long long lo = 0, hi = static_cast<long long>(cands.size()) - 1;
    while (lo <= hi) {
        long long mid = (lo + hi) / 2;
        if (feasible(cands[mid])) {
            best_gap = cands[mid];
            hi = mid - 1;
        } else {
            lo = mid + 1;
        }
    }
    if (best_gap < 0) fail("retention search failed");

    // Lexicographically smallest optimal set: place each pick as early as
    // possible while the remainder stays feasible.
    auto can_finish = [&](long long from, long long slots) {
        long long cur = from;
        for (long long s = 0; s < slots; ++s) {
            long long next = max_reach(cur, best_gap);
            if (next <= cur) return false;
            cur = next;
            if (cur == last) return true;
        }
        return cur == last;
    };
    std::vector<long long> retained;
    long long prev = -1;
    for (long long slot = 0; slot < keep - 1; ++slot) {
        long long chosen = -1;
        for (long long x : iterations) {
            if (x <= prev) continue;
            if (x - prev > best_gap) break;
            if (x == last) break;  // last is reserved for the final slot
            if (can_finish(x, keep - slot - 1)) {
                chosen = x;
                break;
            }
        }
        if (chosen < 0) {
            // remaining slots must all jump maximally
            chosen = max_reach(prev, best_gap);
            if (chosen == last) break;
        }
        retained.push_back(chosen);
        prev = chosen;
    }
    retained.push_back(last);
    retained.erase(std::unique(retained.begin(), retained.end()), retained.end());
    return retained;
}

CkptStore::CkptStore(std::unique_ptr<Backend> primary, std::unique_ptr<Backend> spool)
    : primary_(std::move(primary)), spool_(std::move(spool)) {}

CkptStore CkptStore::local(const fs::path& obj_dir, const fs::path& spool_dir) {
    std::unique_ptr<Backend> spool;
    if (!spool_dir.empty()) spool = std::make_unique<LocalDirBackend>(spool_dir);
    return CkptStore(std::make_unique<LocalDirBackend>(obj_dir), std::move(spool));
}

static std::string meta_json(const CkptMeta& m) {
    json doc{{"projid", m.key.projid},
             {"tstamp", m.key.tstamp},
             {"filename", m.key.filename},
             {"ctx_id", m.key.ctx_id},
             {"value_name", m.key.value_name},
             {"loop_name", m.loop_name},
             {"loop_iteration", m.iteration}};
    return doc.dump();
}

static CkptMeta parse_meta(const std::string& text) {
    json doc = json::parse(text);
    CkptMeta m;
    m.key.projid = doc.at("projid").get<std::string>();
    m.key.tstamp = doc.at("tstamp").get<std::string>();
    m.key.filename = doc.at("filename").get<std::string>();
    m.key.ctx_id = doc.at("ctx_id").get<long long>();
    m.key.value_name = doc.at("value_name").get<std::string>();
    m.loop_name = doc.at("loop_name").get<std::string>();
    m.iteration = doc.at("loop_iteration").get<long long>();
    return m;
}

std::optional<std::string> CkptStore::fetch(const std::string& name) {
    if (auto blob = primary_->get(name)) return blob;
    if (spool_)
        if (auto blob = spool_->get(name)) return blob;
    return std::nullopt;
}

std::string CkptStore::put(const CkptMeta& meta, const std::string& bytes, bool record_mode) {
    std::string id = meta.key.id();
    if (fetch(id + ".bin")) {
        if (record_mode)
            fail("duplicate checkpoint key for '" + meta.key.value_name + "' at ctx " +
                 std::to_string(meta.key.ctx_id));
        return id;  // replay never overwrites
    }
    primary_->put(id + ".bin", bytes);
    primary_->put(id + ".meta", meta_json(meta));
    return id;
}

bool CkptStore::exists(const CkptKey& key) { return fetch(key.id() + ".bin").has_value(); }

std::string CkptStore::get_blob(const CkptKey& key) {
    auto blob = fetch(key.id() + ".bin");
    if (!blob) fail("no checkpoint available for '" + key.value_name + "' at ctx " +
                    std::to_string(key.ctx_id));
    return *blob;
}

std::vector<CkptMeta> CkptStore::entries_for_run(const std::string& projid,
                                                 const std::string& tstamp) {
    std::vector<CkptMeta> out;
    auto scan = [&](Backend& b) {
        for (const auto& name : b.list()) {
            if (name.size() < 5 || name.substr(name.size() - 5) != ".meta") continue;
            auto text = b.get(name);
            if (!text) continue;
            CkptMeta m = parse_meta(*text);
            if (m.key.projid == projid && m.key.tstamp == tstamp) out.push_back(std::move(m));
        }
    };
    scan(*primary_);
    if (spool_) scan(*spool_);
    std::sort(out.begin(), out.end(), [](const CkptMeta& a, const CkptMeta& b) {
        return std::tie(a.iteration, a.key.value_name) < std::tie(b.iteration, b.key.value_name);
    });
    return out;
}

std::map<long long, std::vector<CkptMeta>> CkptStore::by_iteration(const std::string& projid,
                                                                   const std::string& tstamp) {
    std::map<long long, std::vector<CkptMeta>> out;
    for (auto& m : entries_for_run(projid, tstamp)) out[m.iteration].push_back(std::move(m));
    return out;
}

std::optional<long long> CkptStore::latest_iteration(const std::string& projid,
                                                     const std::string& tstamp) {
    auto grouped = by_iteration(projid, tstamp);
    if (grouped.empty()) return std::nullopt;
    return grouped.rbegin()->first;
}

std::optional<long long> CkptStore::nearest_before(const std::string& projid,
                                                   const std::string& tstamp, long long k) {
    auto grouped = by_iteration(projid, tstamp);
    std::optional<long long> best;
    for (const auto& [iter, entries] : grouped)
        if (iter < k) best = iter;
    return best;
}

std::vector<CkptMeta> CkptStore::entries_at(const std::string& projid, const std::string& tstamp,
                                            long long k) {
    auto grouped = by_iteration(projid, tstamp);
    auto it = grouped.find(k);
    if (it == grouped.end()) {
        std::string alt = "pre-loop state (re-execute from iteration 0)";
        std::optional<long long> nearest;
        for (const auto& [iter, entries] : grouped)
            if (iter < k) nearest = iter;
        if (nearest) alt = "iteration " + std::to_string(*nearest);
        fail("no checkpoint available at iteration " + std::to_string(k) +
             "; nearest alternative: " + alt);
    }
    return it->second;
}

std::vector<long long> CkptStore::evict(const std::string& projid, const std::string& tstamp,
                                        const RetentionPolicy& policy) {
    auto grouped = by_iteration(projid, tstamp);
    std::vector<long long> iters;
    for (const auto& [iter, entries] : grouped) iters.push_back(iter);
    if (policy.keep_per_run < 0 ||
        static_cast<long long>(iters.size()) <= policy.keep_per_run)
        return iters;  // unlimited or nothing to do
    if (policy.keep_per_run < 2) fail("eviction requires keep_per_run >= 2");
    auto retained = retain_evenly(iters, policy.keep_per_run);
    std::set<long long> keep(retained.begin(), retained.end());
    for (const auto& [iter, entries] : grouped) {
        if (keep.count(iter)) continue;
        for (const auto& m : entries) {
            std::string id = m.key.id();
            if (policy.spool && spool_) {
                if (auto blob = primary_->get(id + ".bin")) spool_->put(id + ".bin", *blob);
                if (auto meta = primary_->get(id + ".meta")) spool_->put(id + ".meta", *meta);
            }
            primary_->del(id + ".bin");
            primary_->del(id + ".meta");
        }
    }
    return retained;
}

}  // namespace flor
