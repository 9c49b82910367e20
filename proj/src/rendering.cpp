#include "ftklipse/rendering.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "ftklipse/error.hpp"

namespace ftk {

namespace fs = std::filesystem;

std::string_view to_string(RenderFormat f) noexcept {
    switch (f) {
        case RenderFormat::hex: return "hex";
        case RenderFormat::ascii: return "ascii";
        case RenderFormat::unicode: return "unicode";
    }
    return "hex";
}

std::optional<RenderFormat> parse_render_format(std::string_view s) noexcept {
    if (s == "hex") return RenderFormat::hex;
    if (s == "ascii") return RenderFormat::ascii;
    if (s == "unicode") return RenderFormat::unicode;
    return std::nullopt;
}

Bytes slice_evidence(const Evidence& evidence, const fs::path& data_root, std::uint64_t offset,
                     std::uint64_t length) {
    if (offset > evidence.size_bytes || length > evidence.size_bytes - offset)
        fail(ErrorCode::validation, "range offset=" + std::to_string(offset) + " length=" + std::to_string(length) +
                                        " outside evidence of " + std::to_string(evidence.size_bytes) + " bytes");
    fs::path file = data_root / evidence.managed_path;
    std::error_code ec;
    if (!fs::exists(file, ec)) fail(ErrorCode::missing_evidence, "evidence file missing: " + file.string());
    Bytes out(length);
    if (length == 0) return out;
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + file.string());
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(length));
    if (static_cast<std::uint64_t>(in.gcount()) != length)
        fail(ErrorCode::io, "short read from " + file.string());
    return out;
}

namespace {

bool printable(std::uint8_t b) { return b >= 0x20 && b <= 0x7e; }

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

constexpr char32_t kReplacement = 0xFFFD;

// WHATWG UTF-8 decoder: one U+FFFD per maximal invalid subpart.
std::string decode_utf8(ByteView data) {
    std::string out;
    out.reserve(data.size());
    char32_t cp = 0;
    int needed = 0, seen = 0;
    std::uint8_t lower = 0x80, upper = 0xBF;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint8_t b = data[i];
        if (needed == 0) {
            if (b < 0x80) {
                out.push_back(static_cast<char>(b));
            } else if (b >= 0xC2 && b <= 0xDF) {
                needed = 1;
                cp = b & 0x1F;
            } else if (b >= 0xE0 && b <= 0xEF) {
                if (b == 0xE0) lower = 0xA0;
                if (b == 0xED) upper = 0x9F;
                needed = 2;
                cp = b & 0x0F;
            } else if (b >= 0xF0 && b <= 0xF4) {
                if (b == 0xF0) lower = 0x90;
                if (b == 0xF4) upper = 0x8F;
                needed = 3;
                cp = b & 0x07;
            } else {
                append_utf8(out, kReplacement);
            }
            continue;
        }
        if (b < lower || b > upper) {
            cp = 0;
            needed = seen = 0;
            lower = 0x80;
            upper = 0xBF;
            append_utf8(out, kReplacement);
            --i;  // reprocess this byte as a lead byte
            continue;
        }
        lower = 0x80;
        upper = 0xBF;
        cp = (cp << 6) | (b & 0x3F);
        if (++seen == needed) {
            append_utf8(out, cp);
            cp = 0;
            needed = seen = 0;
        }
    }
    if (needed != 0) append_utf8(out, kReplacement);
    return out;
}

std::string decode_utf16(ByteView data, bool little_endian) {
    std::string out;
    out.reserve(data.size());
    std::optional<char32_t> lead;
    std::size_t units = data.size() / 2;
    for (std::size_t i = 0; i < units; ++i) {
        std::uint8_t a = data[2 * i], b = data[2 * i + 1];
        char32_t unit = little_endian ? (a | (b << 8)) : ((a << 8) | b);
        if (lead) {
            if (unit >= 0xDC00 && unit <= 0xDFFF) {
                append_utf8(out, 0x10000 + ((*lead - 0xD800) << 10) + (unit - 0xDC00));
                lead.reset();
                continue;
            }
            append_utf8(out, kReplacement);
            lead.reset();
        }
        if (unit >= 0xD800 && unit <= 0xDBFF)
            lead = unit;
        else if (unit >= 0xDC00 && unit <= 0xDFFF)
            append_utf8(out, kReplacement);
        else
            append_utf8(out, unit);
    }
    if (lead || data.size() % 2 != 0) append_utf8(out, kReplacement);
    return out;
}

}  // namespace

std::string render_hex(ByteView data, std::uint64_t base_offset) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    const std::size_t rows = (data.size() + 15) / 16;
    out.reserve(rows * 79);
    char offset_buf[24];
    for (std::size_t row = 0; row < rows; ++row) {
        std::snprintf(offset_buf, sizeof offset_buf, "%08llx",
                      static_cast<unsigned long long>(base_offset + row * 16));
        out += offset_buf;
        out += "  ";
        const std::size_t start = row * 16;
        const std::size_t n = std::min<std::size_t>(16, data.size() - start);
        for (std::size_t i = 0; i < 16; ++i) {
            if (i == 8) out += ' ';
            if (i < n) {
                out += digits[data[start + i] >> 4];
                out += digits[data[start + i] & 0x0f];
            } else {
                out += "  ";
            }
            if (i != 15) out += ' ';
        }
        out += "  |";
        for (std::size_t i = 0; i < n; ++i) {
            std::uint8_t b = data[start + i];
            out += printable(b) ? static_cast<char>(b) : '.';
        }
        out += "|\n";
    }
    return out;
}

std::string render_ascii(ByteView data) {
    std::string out;
    out.reserve(data.size());
    for (auto b : data) out += (printable(b) || b == '\n' || b == '\t') ? static_cast<char>(b) : '.';
    return out;
}

std::string render_unicode(ByteView data, std::string_view encoding) {
    if (encoding == "utf-8") return decode_utf8(data);
    if (encoding == "utf-16le") return decode_utf16(data, true);
    if (encoding == "utf-16be") return decode_utf16(data, false);
    fail(ErrorCode::validation, "unsupported encoding '" + std::string(encoding) +
                                    "' (supported: utf-8, utf-16le, utf-16be)");
}

std::string render_evidence(const Evidence& evidence, const fs::path& data_root, const RenderRequest& request) {
    if (request.length > kRenderWindowCap)
        fail(ErrorCode::validation, "render window " + std::to_string(request.length) + " exceeds cap of " +
                                        std::to_string(kRenderWindowCap) + " bytes");
    if (request.format == RenderFormat::unicode) {
        // Reject the label before touching the file.
        render_unicode({}, request.encoding.value_or("utf-8"));
    }
    Bytes window = slice_evidence(evidence, data_root, request.offset, request.length);
    switch (request.format) {
        case RenderFormat::hex: return render_hex(window, request.offset);
        case RenderFormat::ascii: return render_ascii(window);
        case RenderFormat::unicode: return render_unicode(window, request.encoding.value_or("utf-8"));
    }
    return {};
}

}  // namespace ftk
