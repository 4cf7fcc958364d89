#include "flor/db.hpp"

#include "flor/error.hpp"
#include "flor/util.hpp"

#include <sqlite3.h>

namespace flor {

long long DbRow::as_int(size_t i) const {
    const auto& c = cells.at(i);
    if (auto* v = std::get_if<long long>(&c)) return *v;
    if (auto* v = std::get_if<double>(&c)) return static_cast<long long>(*v);
    if (auto* v = std::get_if<std::string>(&c)) {
        auto parsed = util::parse_int(*v);
        if (parsed) return *parsed;
    }
    fail("db cell is not an integer");
}

double DbRow::as_double(size_t i) const {
    const auto& c = cells.at(i);
    if (auto* v = std::get_if<double>(&c)) return *v;
    if (auto* v = std::get_if<long long>(&c)) return static_cast<double>(*v);
    if (auto* v = std::get_if<std::string>(&c)) {
        auto parsed = util::parse_double(*v);
        if (parsed) return *parsed;
    }
    fail("db cell is not a number");
}

std::string DbRow::as_text(size_t i) const {
    const auto& c = cells.at(i);
    if (auto* v = std::get_if<std::string>(&c)) return *v;
    if (auto* v = std::get_if<long long>(&c)) return util::format_int(*v);
    if (auto* v = std::get_if<double>(&c)) return util::format_double(*v);
    fail("db cell is null");
}

std::optional<long long> DbRow::opt_int(size_t i) const {
    if (is_null(i)) return std::nullopt;
    return as_int(i);
}

Db::Db(const std::filesystem::path& file) {
    // replay workers read concurrently through one connection
    if (!sqlite3_threadsafe()) fail("sqlite3 must be built threadsafe");
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    if (sqlite3_open(file.string().c_str(), &handle_) != SQLITE_OK)
        fail("cannot open database " + file.string());
    sqlite3_busy_timeout(handle_, 10000);
}

Db::~Db() {
    if (handle_) sqlite3_close(handle_);
}

namespace {

class Stmt {
public:
    Stmt(sqlite3* db, const std::string& sql) {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
            fail("bad sql: " + sql + " (" + sqlite3_errmsg(db) + ")");
    }
    ~Stmt() {
        if (stmt_) sqlite3_finalize(stmt_);
    }
    sqlite3_stmt* get() { return stmt_; }

private:
    sqlite3_stmt* stmt_ = nullptr;
};

void bind_params(sqlite3_stmt* stmt, const std::vector<DbParam>& params) {
    int idx = 1;
    for (const auto& p : params) {
        if (std::holds_alternative<std::nullptr_t>(p))
            sqlite3_bind_null(stmt, idx);
        else if (auto* v = std::get_if<long long>(&p))
            sqlite3_bind_int64(stmt, idx, *v);
        else if (auto* v = std::get_if<double>(&p))
            sqlite3_bind_double(stmt, idx, *v);
        else
            sqlite3_bind_text(stmt, idx, std::get<std::string>(p).c_str(), -1, SQLITE_TRANSIENT);
        ++idx;
    }
}

}  // namespace

void Db::exec(const std::string& sql, const std::vector<DbParam>& params) {
    Stmt stmt(handle_, sql);
    bind_params(stmt.get(), params);
    int rc = sqlite3_step(stmt.get());
    if (rc != SQLITE_DONE && rc != SQLITE_ROW)
        fail("sql exec failed: " + sql + " (" + sqlite3_errmsg(handle_) + ")");
}

std::vector<DbRow> Db::query(const std::string& sql, const std::vector<DbParam>& params) {
    Stmt stmt(handle_, sql);
    bind_params(stmt.get(), params);
    std::vector<DbRow> rows;
    for (;;) {
        int rc = sqlite3_step(stmt.get());
        if (rc == SQLITE_DONE) break;
        if (rc != SQLITE_ROW) fail("sql query failed: " + sql + " (" + sqlite3_errmsg(handle_) + ")");
        DbRow row;
        int n = sqlite3_column_count(stmt.get());
        row.cells.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            switch (sqlite3_column_type(stmt.get(), i)) {
                case SQLITE_NULL: row.cells.emplace_back(std::monostate{}); break;
                case SQLITE_INTEGER:
                    row.cells.emplace_back(
                        static_cast<long long>(sqlite3_column_int64(stmt.get(), i)));
                    break;
                case SQLITE_FLOAT: row.cells.emplace_back(sqlite3_column_double(stmt.get(), i)); break;
                default:
                    row.cells.emplace_back(std::string(
                        reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), i))));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void Db::begin() { exec("BEGIN IMMEDIATE"); }
void Db::commit() { exec("COMMIT"); }
void Db::rollback() { exec("ROLLBACK"); }

}  // namespace flor
