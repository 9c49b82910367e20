#include "ftklipse/audit_log.hpp"

#include <cerrno>
#include <cstring>
#include <iostream>

#include "ftklipse/error.hpp"
#include "ftklipse/rendering.hpp"

namespace ftk {

LogSink::LogSink(std::filesystem::path path, std::FILE* file, bool echo, std::ostream* console)
    : path_(std::move(path)), file_(file), echo_(echo), console_(console) {}

LogSink::~LogSink() {
    if (file_) std::fclose(file_);
}

std::shared_ptr<LogSink> LogSink::open(const std::filesystem::path& path, bool echo_console, std::ostream* console) {
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) fail(ErrorCode::io, "cannot open log file " + path.string() + ": " + std::strerror(errno));
    return std::shared_ptr<LogSink>(new LogSink(path, f, echo_console, console ? console : &std::clog));
}

std::string LogSink::format_line(TimestampMs ts, std::string_view message) {
    std::string clean = render_unicode(as_bytes(message), "utf-8");
    std::string escaped;
    escaped.reserve(clean.size());
    for (char c : clean) {
        if (c == '\n')
            escaped += "\\n";
        else if (c == '\r')
            escaped += "\\r";
        else
            escaped += c;
    }
    return "[ " + format_iso8601(ts) + " ]: " + escaped;
}

void LogSink::log(std::string_view message) {
    std::lock_guard lock(mu_);
    last_ts_ = std::max(last_ts_, now_utc_ms());
    std::string line = format_line(last_ts_, message);
    line += '\n';
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        fail(ErrorCode::io, "write to log file " + path_.string() + " failed");
    if (echo_ && console_) {
        *console_ << line;
        console_->flush();
    }
}

}  // namespace ftk
