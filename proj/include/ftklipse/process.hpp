#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ftk {

struct ProcessOptions {
    std::filesystem::path working_dir;            // empty: inherit
    std::chrono::milliseconds timeout{300'000};
    std::size_t output_cap = 10u << 20;           // per stream
};

struct ProcessResult {
    int exit_code = -1;          // -signal when killed by a signal
    std::string stdout_text;
    std::string stderr_text;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
    bool timed_out = false;
};

/// Runs argv directly (no shell) in its own process group with stdin from
/// /dev/null. On timeout the whole group is killed. Throws ErrorCode::launch
/// when the executable cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

/// Searches PATH for `name` when it has no slash. Empty if not found.
std::filesystem::path find_executable(const std::string& name);

}  // namespace ftk
