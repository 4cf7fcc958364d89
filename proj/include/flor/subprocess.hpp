#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flor::util {

struct ProcResult {
    int exit_code = -1;
    std::string out;   // stdout
    std::string err;   // stderr
    double seconds = 0.0;
};

// fork/exec without a shell. argv[0] is resolved through PATH.
// env entries override/extend the inherited environment.
ProcResult run_process(const std::vector<std::string>& argv,
                       const std::filesystem::path& cwd = {},
                       const std::map<std::string, std::string>& env = {},
                       const std::string& stdin_data = {});

// Convenience for commands that must succeed; returns trimmed stdout.
std::string run_checked(const std::vector<std::string>& argv,
                        const std::filesystem::path& cwd = {},
                        const std::map<std::string, std::string>& env = {});

}  // namespace flor::util
