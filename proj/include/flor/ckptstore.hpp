#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace flor {

struct CkptKey {
    std::string projid;
    std::string tstamp;
    std::string filename;
    long long ctx_id = 0;
    std::string value_name;

    std::string id() const;  // stable hash of the key fields
    bool operator==(const CkptKey&) const = default;
};

struct CkptMeta {
    CkptKey key;
    std::string loop_name;
    long long iteration = -1;  // outer-loop iteration the state belongs to
};

// key -> blob. Objects are named by the store; backends just hold bytes.
class Backend {
public:
    virtual ~Backend() = default;
    virtual void put(const std::string& name, const std::string& bytes) = 0;
    virtual std::optional<std::string> get(const std::string& name) = 0;
    virtual void del(const std::string& name) = 0;
    virtual std::vector<std::string> list() = 0;
};

// One file per entry under a directory, filename = stable hash of the key.
class LocalDirBackend : public Backend {
public:
    explicit LocalDirBackend(std::filesystem::path dir);
    void put(const std::string& name, const std::string& bytes) override;
    std::optional<std::string> get(const std::string& name) override;
    void del(const std::string& name) override;
    std::vector<std::string> list() override;

private:
    std::filesystem::path dir_;
};

struct RetentionPolicy {
    long long keep_per_run = -1;  // -1 = unlimited
    bool spool = false;           // move evicted entries to the spool backend
};

// Retain the final checkpoint plus keep-1 others minimizing the maximum
// iteration gap (gap measured from the pre-loop state at -1). Ties break
// toward earlier iterations. Pure; brute-force checkable.
std::vector<long long> retain_evenly(std::vector<long long> iterations, long long keep);

class CkptStore {
public:
    CkptStore(std::unique_ptr<Backend> primary, std::unique_ptr<Backend> spool = nullptr);
    static CkptStore local(const std::filesystem::path& obj_dir,
                           const std::filesystem::path& spool_dir = {});

    // record_mode: duplicate key -> error. Replay never overwrites: existing
    // key -> no-op returning the existing id.
    std::string put(const CkptMeta& meta, const std::string& bytes, bool record_mode);

    bool exists(const CkptKey& key);
    std::string get_blob(const CkptKey& key);  // error if missing

    std::vector<CkptMeta> entries_for_run(const std::string& projid, const std::string& tstamp);
    std::map<long long, std::vector<CkptMeta>> by_iteration(const std::string& projid,
                                                            const std::string& tstamp);
    std::optional<long long> latest_iteration(const std::string& projid,
                                              const std::string& tstamp);
    // Maximal checkpointed iteration strictly below k; nullopt = pre-loop state.
    std::optional<long long> nearest_before(const std::string& projid, const std::string& tstamp,
                                            long long k);
    // Entries at iteration k; error naming the nearest feasible alternative.
    std::vector<CkptMeta> entries_at(const std::string& projid, const std::string& tstamp,
                                     long long k);

    // Returns the retained iteration set. Fewer checkpoints than keep -> no-op.
    std::vector<long long> evict(const std::string& projid, const std::string& tstamp,
                                 const RetentionPolicy& policy);

private:
    std::unique_ptr<Backend> primary_;
    std::unique_ptr<Backend> spool_;
    std::optional<std::string> fetch(const std::string& name);
};

}  // namespace flor
