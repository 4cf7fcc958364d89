#include "flor/util.hpp"

#include "flor/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace flor::util {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* b = s.data();
    const char* e = b + s.size();
    double out = 0;
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) return std::nullopt;
    return out;
}

std::optional<long long> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* b = s.data();
    const char* e = b + s.size();
    long long out = 0;
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) return std::nullopt;
    return out;
}

bool looks_numeric(const std::string& s) { return parse_double(s).has_value(); }

std::string format_int(long long v) { return std::to_string(v); }

static std::string format_tm(const std::tm& tm) {
    char buf[72];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string now_tstamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return format_tm(tm);
}

static std::optional<std::tm> parse_tm(const std::string& s) {
    std::tm tm{};
    if (s.size() != 19) return std::nullopt;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                    &tm.tm_hour, &tm.tm_min, &tm.tm_sec) != 6)
        return std::nullopt;
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    return tm;
}

std::string tstamp_add_seconds(const std::string& tstamp, long long secs) {
    auto tm = parse_tm(tstamp);
    if (!tm) fail("bad tstamp: " + tstamp);
    std::time_t t = timegm(&*tm) + secs;
    std::tm out{};
    gmtime_r(&t, &out);
    return format_tm(out);
}

bool valid_tstamp(const std::string& tstamp) { return parse_tm(tstamp).has_value(); }

std::string stable_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& contents) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write " + p.string());
    out << contents;
    out.flush();
    if (!out) fail("write failed: " + p.string());
}

void append_file(const fs::path& p, const std::string& contents) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out) fail("cannot append " + p.string());
    out << contents;
}

void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    fs::copy(from, to,
             fs::copy_options::recursive | fs::copy_options::copy_symlinks |
                 fs::copy_options::overwrite_existing);
}

std::string hash_tree(const fs::path& root, const std::vector<std::string>& skip_names) {
    std::vector<std::string> entries;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
         ++it) {
        const auto rel = fs::relative(it->path(), root).string();
        bool skip = false;
        for (const auto& name : skip_names) {
            if (rel == name || starts_with(rel, name + "/")) skip = true;
        }
        if (skip) {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file())
            entries.push_back(rel + "\x1f" + stable_hash(read_file(it->path())));
        else if (it->is_directory())
            entries.push_back(rel + "/");
    }
    std::sort(entries.begin(), entries.end());
    return stable_hash(join(entries, "\n"));
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

FileLock::FileLock(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fd_ = ::open(p.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) fail("cannot open lock file " + p.string());
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        fail("cannot lock " + p.string());
    }
}

FileLock::~FileLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

fs::path make_temp_dir(const std::string& hint) {
    static std::mt19937_64 gen(std::random_device{}() ^ static_cast<unsigned long long>(::getpid()));
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto p = fs::temp_directory_path() / (hint + "-" + std::to_string(gen() % 100000000));
        std::error_code ec;
        if (fs::create_directories(p, ec) && !ec) return p;
    }
    fail("cannot create temp dir for " + hint);
}

}  // namespace flor::util
