#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftk {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

TimestampMs now_utc_ms();

/// `2026-10-18T09:15:02.123Z`
std::string format_iso8601(TimestampMs ts);

/// Compact form used in file names: `20261018T091502123Z`.
std::string format_compact(TimestampMs ts);

std::string to_hex(ByteView data);

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

/// Writes to `<path>.tmp`, flushes, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, ByteView data);

std::string trim(std::string_view s);

}  // namespace ftk
