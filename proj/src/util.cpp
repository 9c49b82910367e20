#include "ftklipse/util.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include "ftklipse/error.hpp"

namespace ftk {

namespace fs = std::filesystem;

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::validation: return "validation";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::integrity: return "integrity";
        case ErrorCode::corruption: return "corruption";
        case ErrorCode::missing_evidence: return "missing_evidence";
        case ErrorCode::io: return "io";
        case ErrorCode::usage: return "usage";
        case ErrorCode::monotonicity: return "monotonicity";
        case ErrorCode::decode: return "decode";
        case ErrorCode::platform: return "platform";
        case ErrorCode::manifest: return "manifest";
        case ErrorCode::launch: return "launch";
        case ErrorCode::timeout: return "timeout";
        case ErrorCode::unsupported_format: return "unsupported_format";
        case ErrorCode::unavailable: return "unavailable";
        case ErrorCode::generation: return "generation";
        case ErrorCode::internal: return "internal";
    }
    return "internal";
}

TimestampMs now_utc_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

namespace {

std::tm utc_parts(TimestampMs ts, int& millis) {
    auto secs = static_cast<std::time_t>(ts / 1000);
    millis = static_cast<int>(ts % 1000);
    if (millis < 0) {
        millis += 1000;
        --secs;
    }
    std::tm tm{};
    gmtime_r(&secs, &tm);
    return tm;
}

}  // namespace

std::string format_iso8601(TimestampMs ts) {
    int ms = 0;
    std::tm tm = utc_parts(ts, ms);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
    return buf;
}

std::string format_compact(TimestampMs ts) {
    int ms = 0;
    std::tm tm = utc_parts(ts, ms);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02d%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
    return buf;
}

std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::io, "read failed: " + path.string());
    return out;
}

void write_file(const fs::path& path, ByteView data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

void write_file_atomic(const fs::path& path, ByteView data) {
    fs::path tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::io, "cannot create " + tmp.string());
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            std::error_code ec;
            fs::remove(tmp, ec);
            fail(ErrorCode::io, "write failed: " + tmp.string());
        }
        done += static_cast<std::size_t>(n);
    }
    ::fdatasync(fd);
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::io, "rename failed: " + path.string() + ": " + ec.message());
}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace ftk
