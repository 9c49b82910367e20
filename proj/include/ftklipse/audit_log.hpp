#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>

#include "ftklipse/util.hpp"

namespace ftk {

/// Application log. Each call appends one line
///   `[ 2026-10-18T09:15:02.123Z ]: message`
/// and, when echoing, writes the same line to the console stream.
class LogSink {
public:
    /// Creates the file if absent and opens it for append. Throws io.
    static std::shared_ptr<LogSink> open(const std::filesystem::path& path, bool echo_console,
                                         std::ostream* console = nullptr);

    ~LogSink();
    LogSink(const LogSink&) = delete;
    LogSink& operator=(const LogSink&) = delete;

    void log(std::string_view message);

    const std::filesystem::path& path() const { return path_; }
    bool echo_console() const { return echo_; }

    /// `[ <ts> ]: <message>` without the newline; newlines and carriage
    /// returns become the two-character escapes `\n` / `\r`, invalid UTF-8
    /// becomes U+FFFD.
    static std::string format_line(TimestampMs ts, std::string_view message);

private:
    LogSink(std::filesystem::path path, std::FILE* file, bool echo, std::ostream* console);

    std::filesystem::path path_;
    std::FILE* file_;
    bool echo_;
    std::ostream* console_;
    std::mutex mu_;
    TimestampMs last_ts_ = 0;
};

}  // namespace ftk
