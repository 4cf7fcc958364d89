#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flor::util {

namespace fs = std::filesystem;

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
std::optional<double> parse_double(const std::string& s);
std::optional<long long> parse_int(const std::string& s);
bool looks_numeric(const std::string& s);

std::string format_int(long long v);

// Run timestamps: sortable "YYYY-MM-DDTHH:MM:SS", UTC.
std::string now_tstamp();
std::string tstamp_add_seconds(const std::string& tstamp, long long secs);
bool valid_tstamp(const std::string& tstamp);

// Stable FNV-1a over bytes, hex encoded. Used for checkpoint filenames.
std::string stable_hash(const std::string& bytes);

double now_seconds();  // monotonic

std::string read_file(const fs::path& p);
void write_file(const fs::path& p, const std::string& contents);
void append_file(const fs::path& p, const std::string& contents);

// Recursive copy, used by tests to clone fixture projects.
void copy_tree(const fs::path& from, const fs::path& to);

// Content hash of a directory tree (paths + bytes), skipping the named
// top-level entries. Used to assert non-interference with user files.
std::string hash_tree(const fs::path& root, const std::vector<std::string>& skip_names);

std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);

// Process-wide advisory lock on a file; blocks until acquired.
class FileLock {
public:
    explicit FileLock(const fs::path& p);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

fs::path make_temp_dir(const std::string& hint);

}  // namespace flor::util
