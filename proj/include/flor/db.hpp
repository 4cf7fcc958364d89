#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

struct sqlite3;

namespace flor {

// Minimal statement interface over the embedded database. Parameters bind
// positionally; results come back as typed cells.
using DbParam = std::variant<std::nullptr_t, long long, double, std::string>;
using DbCell = std::variant<std::monostate, long long, double, std::string>;

struct DbRow {
    std::vector<DbCell> cells;

    bool is_null(size_t i) const { return std::holds_alternative<std::monostate>(cells.at(i)); }
    long long as_int(size_t i) const;
    double as_double(size_t i) const;
    std::string as_text(size_t i) const;  // numeric cells render as text
    std::optional<long long> opt_int(size_t i) const;
};

class Db {
public:
    explicit Db(const std::filesystem::path& file);
    ~Db();
    Db(const Db&) = delete;
    Db& operator=(const Db&) = delete;

    void exec(const std::string& sql, const std::vector<DbParam>& params = {});
    std::vector<DbRow> query(const std::string& sql, const std::vector<DbParam>& params = {});

    void begin();
    void commit();
    void rollback();

private:
    sqlite3* handle_ = nullptr;
};

// Scope guard: rolls back unless commit() was called.
class DbTxn {
public:
    explicit DbTxn(Db& db) : db_(db) { db_.begin(); }
    ~DbTxn() {
        if (!done_) db_.rollback();
    }
    void commit() {
        db_.commit();
        done_ = true;
    }

private:
    Db& db_;
    bool done_ = false;
};

}  // namespace flor
