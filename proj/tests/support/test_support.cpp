#include "test_support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace ftk::test {

TempDir::TempDir() {
    const char* base = std::getenv("TMPDIR");
    std::string tmpl = std::string(base && *base ? base : "/tmp") + "/ftklipse-test-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
}

TempDir::~TempDir() {
    std::error_code ec;
    // Tests may leave read-only directories behind.
    for (auto it = fs::recursive_directory_iterator(path_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec))
        fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(path_, ec);
}

fs::path fixture_dir() { return FTK_FIXTURE_DIR; }
fs::path fixture_tools_dir() { return fixture_dir() / "tools.d"; }

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
    Bytes out(n);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& b : out) b = static_cast<std::uint8_t>(d(rng));
    return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool hostile) {
    static const std::string specials = "#$%&_{}~^\\<>\"'|[]`@!\n\t\r";
    static const std::vector<std::string> multibyte = {"é", "ü", "ß", "€", "中", "😀", "\xc3\x28", "\xff", "\x80"};
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<int> pick(0, 9);
    std::uniform_int_distribution<int> ascii(0x20, 0x7e);
    std::string s;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        int p = pick(rng);
        if (hostile && p < 4) {
            s += specials[std::uniform_int_distribution<std::size_t>(0, specials.size() - 1)(rng)];
        } else if (hostile && p == 4) {
            s += multibyte[std::uniform_int_distribution<std::size_t>(0, multibyte.size() - 1)(rng)];
        } else if (hostile && p == 5) {
            s += static_cast<char>(std::uniform_int_distribution<int>(0, 31)(rng));
        } else {
            s += static_cast<char>(ascii(rng));
        }
    }
    return s;
}

void write_bytes(const fs::path& p, const Bytes& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_text(const fs::path& p, const std::string& text) { write_bytes(p, Bytes(text.begin(), text.end())); }

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

CommandOutput run_shell(const std::string& command) {
    CommandOutput r;
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed: " + command);
    std::array<char, 65536> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

bool have_command(const std::string& name) {
    return run_shell("command -v " + shell_quote(name) + " >/dev/null 2>&1").status == 0;
}

std::string sha256sum_oracle(const fs::path& p) {
    auto r = run_shell("sha256sum -b " + shell_quote(p.string()));
    if (r.status != 0 || r.out.size() < 64) throw std::runtime_error("sha256sum failed for " + p.string());
    return r.out.substr(0, 64);
}

Bytes read_range_oracle(const fs::path& p, std::uint64_t offset, std::uint64_t length) {
    auto r = run_shell("tail -c +" + std::to_string(offset + 1) + " " + shell_quote(p.string()) + " | head -c " +
                       std::to_string(length));
    if (r.status != 0) throw std::runtime_error("tail/head failed for " + p.string());
    return Bytes(r.out.begin(), r.out.end());
}

std::uint32_t crc32_bitwise(ByteView data) {
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : data) {
        crc ^= b;
        for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
    }
    return ~crc;
}

Bytes parse_hex_dump(const std::string& dump, std::uint64_t base_offset, std::string* error) {
    static const std::regex row(
        R"(^([0-9a-f]{8})  ((?:[0-9a-f]{2} |   ){8}) ((?:[0-9a-f]{2} |   ){8}) \|([\x20-\x7e]{1,16})\|$)");
    Bytes out;
    auto bad = [&](const std::string& why) {
        if (error) *error = why;
        return Bytes{};
    };
    if (dump.empty()) return out;
    if (dump.back() != '\n') return bad("missing final newline");

    std::istringstream in(dump);
    std::string line;
    std::uint64_t expected = base_offset;
    bool short_row_seen = false;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, row)) return bad("row does not match layout: '" + line + "'");
        if (short_row_seen) return bad("short row before the end");
        std::ostringstream want;
        want << std::hex;
        want.width(8);
        want.fill('0');
        want << (expected & 0xffffffffu);
        if (m[1].str() != want.str()) return bad("offset " + m[1].str() + " expected " + want.str());

        std::string pairs = m[2].str() + m[3].str();
        std::size_t count = 0;
        bool blank = false;
        for (std::size_t i = 0; i < 16; ++i) {
            std::string cell = pairs.substr(i * 3, 2);
            if (cell == "  ") {
                blank = true;
                continue;
            }
            if (blank) return bad("byte after padding");
            out.push_back(static_cast<std::uint8_t>(std::stoi(cell, nullptr, 16)));
            ++count;
        }
        std::string gutter = m[4].str();
        if (gutter.size() != count) return bad("gutter width differs from byte count");
        for (std::size_t i = 0; i < count; ++i) {
            std::uint8_t b = out[out.size() - count + i];
            char want_c = (b >= 0x20 && b <= 0x7e) ? static_cast<char>(b) : '.';
            if (gutter[i] != want_c) return bad("gutter mismatch in row " + m[1].str());
        }
        if (line.find('|') != 60) return bad("gutter not at column 60");
        if (count < 16) short_row_seen = true;
        expected += 16;
    }
    return out;
}

void flip_byte(const fs::path& p, std::uint64_t offset) {
    std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.get(c);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(static_cast<char>(c ^ 0x01));
    if (!f) throw std::runtime_error("cannot flip byte in " + p.string());
}

}  // namespace ftk::test

namespace ftk::test {

std::u32string decode_utf8_reference(const std::string& s) {
    std::u32string out;
    std::size_t i = 0;
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    while (i < s.size()) {
        unsigned char b = byte(i);
        if (b < 0x80) {
            out.push_back(b);
            ++i;
            continue;
        }
        int need;
        unsigned char lo = 0x80, hi = 0xBF;
        char32_t cp;
        if (b >= 0xC2 && b <= 0xDF) {
            need = 1;
            cp = b & 0x1F;
        } else if (b >= 0xE0 && b <= 0xEF) {
            need = 2;
            cp = b & 0x0F;
            if (b == 0xE0) lo = 0xA0;
            if (b == 0xED) hi = 0x9F;
        } else if (b >= 0xF0 && b <= 0xF4) {
            need = 3;
            cp = b & 0x07;
            if (b == 0xF0) lo = 0x90;
            if (b == 0xF4) hi = 0x8F;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        bool ok = true;
        for (int k = 0; k < need; ++k, ++j) {
            if (j >= s.size() || byte(j) < lo || byte(j) > hi) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (byte(j) & 0x3F);
            lo = 0x80;
            hi = 0xBF;
        }
        if (ok) {
            out.push_back(cp);
            i = j;
        } else {
            out.push_back(0xFFFD);
            i = j;  // the offending byte starts the next sequence
        }
    }
    return out;
}

std::string encode_utf8(const std::u32string& s) {
    std::string out;
    for (char32_t cp : s) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

std::string latex_visible_text(const std::string& input) {
    std::string out;
    for (char32_t cp : decode_utf8_reference(input)) {
        if (cp < 0x20 || cp == 0x7F) {
            out += ' ';
        } else if (cp < 0x80 || (cp >= 0xC0 && cp <= 0xFF)) {
            out += encode_utf8(std::u32string(1, cp));
        } else {
            char buf[16];
            std::snprintf(buf, sizeof buf, "[U+%04X]", static_cast<unsigned>(cp));
            out += buf;
        }
    }
    return out;
}

bool latex_unescape(const std::string& escaped, bool hard_spaces, std::string* out) {
    static const std::vector<std::pair<std::string, char>> table = {
        {"\\textbackslash{}", '\\'}, {"\\textasciitilde{}", '~'}, {"\\textasciicircum{}", '^'},
        {"\\textless{}", '<'},       {"\\textgreater{}", '>'},    {"\\textbar{}", '|'},
        {"\\{", '{'},                {"\\}", '}'},                {"\\#", '#'},
        {"\\$", '$'},                {"\\%", '%'},                {"\\&", '&'},
        {"\\_", '_'},                {"{[}", '['},                {"{]}", ']'},
    };
    std::string r;
    std::size_t i = 0;
    while (i < escaped.size()) {
        bool matched = false;
        for (const auto& [seq, c] : table) {
            if (escaped.compare(i, seq.size(), seq) == 0) {
                r += c;
                i += seq.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        char c = escaped[i];
        if (c == '~' && hard_spaces) {
            r += ' ';
        } else if (std::string_view("\\{}#$%&_~^").find(c) != std::string_view::npos) {
            return false;
        } else {
            r += c;
        }
        ++i;
    }
    *out = r;
    return true;
}

std::vector<std::string> latex_document_problems(const std::string& doc) {
    static const std::regex marker(R"(^% (custody \d+:\d+|begin-excerpt|end-excerpt)$)");
    std::vector<std::string> problems;
    int depth = 0;
    std::size_t line = 1;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        char c = doc[i];
        if (c == '\n') {
            ++line;
        } else if (c == '\\') {
            if (i + 1 < doc.size() && std::isalpha(static_cast<unsigned char>(doc[i + 1]))) {
                while (i + 1 < doc.size() && std::isalpha(static_cast<unsigned char>(doc[i + 1]))) ++i;
            } else {
                ++i;  // control symbol such as \{ \% or \\ .
            }
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth < 0) problems.push_back("unbalanced '}' on line " + std::to_string(line));
        } else if (c == '%') {
            auto end = doc.find('\n', i);
            std::string comment = doc.substr(i, end == std::string::npos ? std::string::npos : end - i);
            if (!std::regex_match(comment, marker))
                problems.push_back("stray comment on line " + std::to_string(line) + ": " + comment);
            i = (end == std::string::npos ? doc.size() : end) - 1;
        } else if (c == '#' || c == '$' || c == '^' || c == '_') {
            problems.push_back(std::string("raw '") + c + "' on line " + std::to_string(line));
        }
    }
    if (depth != 0) problems.push_back("unbalanced braces at end of document");
    return problems;
}

std::string html_visible_text(const std::string& input) {
    std::u32string cps = decode_utf8_reference(input);
    for (auto& cp : cps)
        if (cp == 0) cp = 0xFFFD;
    return encode_utf8(cps);
}

bool html_unescape(const std::string& escaped, std::string* out) {
    static const std::vector<std::pair<std::string, char>> table = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}};
    std::string r;
    for (std::size_t i = 0; i < escaped.size();) {
        char c = escaped[i];
        if (c == '&') {
            bool matched = false;
            for (const auto& [seq, ch] : table) {
                if (escaped.compare(i, seq.size(), seq) == 0) {
                    r += ch;
                    i += seq.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) return false;
            continue;
        }
        if (c == '<' || c == '>' || c == '"') return false;
        r += c;
        ++i;
    }
    *out = r;
    return true;
}

std::vector<std::string> html_document_problems(const std::string& doc) {
    static const std::regex tag(
        R"(^(!DOCTYPE html|/?(html|head|meta|title|style|body|header|h1|h2|h3|dl|dt|dd|section|table|tr|th|td|code|div|pre|ul|li|p|em|strong)( [a-z-]+="[^"<>&]*")*)$)");
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        char c = doc[i];
        if (c == '&') {
            static const std::regex entity(R"(^&(amp|lt|gt|quot|#39);)");
            if (!std::regex_search(doc.substr(i, 8), entity))
                problems.push_back("bare '&' at offset " + std::to_string(i));
        } else if (c == '<') {
            auto close = doc.find('>', i);
            if (close == std::string::npos) {
                problems.push_back("unterminated tag at offset " + std::to_string(i));
                break;
            }
            std::string inner = doc.substr(i + 1, close - i - 1);
            if (!std::regex_match(inner, tag)) problems.push_back("unexpected tag <" + inner + ">");
            i = close;
        } else if (c == '>') {
            problems.push_back("bare '>' at offset " + std::to_string(i));
        }
    }
    return problems;
}

}  // namespace ftk::test
