#pragma once

#include <stdexcept>
#include <string>

namespace ashe {

// Exit codes used by the CLI and by tools that wrap library calls.
enum ExitCode {
    kExitOk = 0,
    kExitConfig = 2,
    kExitData = 3,
    kExitContract = 4,
};

// Bad or inconsistent configuration (unknown keys, out-of-range values).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed input data (images, label files, weight files).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A precondition or invariant of an API was violated by the caller.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractError(msg);
}

}  // namespace ashe
