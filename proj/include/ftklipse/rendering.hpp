#pragma once

// Read-only rendering of evidence byte ranges. Nothing here records custody
// or touches the store; callers at the service boundary log `viewed`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ftklipse/casework.hpp"
#include "ftklipse/util.hpp"

namespace ftk {

enum class RenderFormat { hex, ascii, unicode };

std::string_view to_string(RenderFormat f) noexcept;
std::optional<RenderFormat> parse_render_format(std::string_view s) noexcept;

inline constexpr std::uint64_t kRenderWindowCap = 1u << 20;

struct RenderRequest {
    RenderFormat format = RenderFormat::hex;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::optional<std::string> encoding;  // unicode only: utf-8, utf-16le, utf-16be
};

/// Reads exactly [offset, offset+length) of the evidence's managed file.
Bytes slice_evidence(const Evidence& evidence, const std::filesystem::path& data_root, std::uint64_t offset,
                     std::uint64_t length);

/// Canonical dump, one row per 16 bytes:
///   `00000000  41 42 43 44 45 46 47 48  49 4a 4b 4c 4d 4e 4f 50  |ABCDEFGHIJKLMNOP|`
/// Short final rows are space-padded so the gutter starts in column 60.
std::string render_hex(ByteView data, std::uint64_t base_offset = 0);

std::string render_ascii(ByteView data);

/// Decodes to UTF-8, substituting U+FFFD for each maximal invalid
/// subsequence. Throws validation for an unknown encoding label.
std::string render_unicode(ByteView data, std::string_view encoding);

/// Validates the request (window cap, encoding) and renders the slice.
std::string render_evidence(const Evidence& evidence, const std::filesystem::path& data_root,
                            const RenderRequest& request);

}  // namespace ftk
