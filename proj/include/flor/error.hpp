#pragma once

#include <stdexcept>
#include <string>

namespace flor {

// All recoverable failures surface as Error; the CLI maps them to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

[[noreturn]] inline void fail(std::string msg) { throw Error(std::move(msg)); }

}  // namespace flor
