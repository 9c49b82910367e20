#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ftklipse/toolkit.hpp"

namespace ftk {

namespace fs = std::filesystem;

std::string_view to_string(ToolType t) noexcept {
    switch (t) {
        case ToolType::collection: return "collection";
        case ToolType::analysis: return "analysis";
        case ToolType::other: return "other";
    }
    return "other";
}

std::string_view to_string(Platform p) noexcept { return p == Platform::win ? "win" : "unix"; }

std::string_view to_string(ParamKind k) noexcept {
    switch (k) {
        case ParamKind::text: return "text";
        case ParamKind::flag: return "flag";
        case ParamKind::path: return "path";
    }
    return "text";
}

std::optional<ToolType> parse_tool_type(std::string_view s) noexcept {
    if (s == "collection") return ToolType::collection;
    if (s == "analysis") return ToolType::analysis;
    if (s == "other") return ToolType::other;
    return std::nullopt;
}

std::optional<Platform> parse_platform(std::string_view s) noexcept {
    if (s == "win") return Platform::win;
    if (s == "unix") return Platform::unix;
    return std::nullopt;
}

namespace {

[[noreturn]] void manifest_error(std::string_view field, const std::string& what) {
    fail(ErrorCode::manifest, "manifest field `" + std::string(field) + "`: " + what);
}

bool parse_bool(std::string_view key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    manifest_error(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_bar(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto bar = s.find('|', start);
        parts.push_back(trim(s.substr(start, bar == std::string::npos ? std::string::npos : bar - start)));
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return parts;
}

// Calls `each(name)` for every `{name}` in `s`; unbalanced braces are errors.
template <typename F>
void for_each_placeholder(std::string_view field, std::string_view s, F&& each) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto open = s.find_first_of("{}", pos);
        if (open == std::string_view::npos) break;
        if (s[open] == '}') manifest_error(field, "unbalanced '}'");
        auto close = s.find('}', open + 1);
        if (close == std::string_view::npos) manifest_error(field, "unterminated placeholder");
        each(s.substr(open + 1, close - open - 1));
        pos = close + 1;
    }
}

void check_command_placeholders(const ToolManifest& m) {
    std::set<std::string, std::less<>> keys;
    for (const auto& p : m.param_form) keys.insert(p.key);
    for_each_placeholder("command", m.command_template, [&](std::string_view name) {
        if (name == "evidence_path" || name == "case_dir") return;
        if (name == "output_path") {
            if (!m.output_file) manifest_error("command", "{output_path} used but output_file is not declared");
            return;
        }
        if (name.starts_with("param:")) {
            if (!keys.contains(name.substr(6)))
                manifest_error("command", "undeclared parameter {" + std::string(name) + "}");
            return;
        }
        manifest_error("command", "unknown placeholder {" + std::string(name) + "}");
    });
    if (m.output_file) {
        for_each_placeholder("output_file", *m.output_file, [&](std::string_view name) {
            if (name != "evidence_id" && name != "evidence_name" && name != "tool_id")
                manifest_error("output_file", "unknown placeholder {" + std::string(name) + "}");
        });
    }
}

}  // namespace

std::vector<std::string> tokenize_command(std::string_view command) {
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false, quoted = false;
    for (char c : command) {
        if (quoted) {
            if (c == '"')
                quoted = false;
            else
                cur += c;
            continue;
        }
        if (c == '"') {
            quoted = in_token = true;
        } else if (c == ' ' || c == '\t') {
            if (in_token) out.push_back(std::move(cur));
            cur.clear();
            in_token = false;
        } else {
            cur += c;
            in_token = true;
        }
    }
    if (quoted) manifest_error("command", "unterminated quote");
    if (in_token) out.push_back(std::move(cur));
    return out;
}

ToolManifest parse_manifest(std::string_view text) {
    ToolManifest m;
    std::set<std::string> seen;
    std::optional<std::string> name, friendly;
    bool have_platform = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::manifest, "manifest line " + std::to_string(line_no) + ": expected `key = value`");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key != "param" && !seen.insert(key).second) manifest_error(key, "declared more than once");

        if (key == "id") {
            m.id = value;
        } else if (key == "name") {
            name = value;
        } else if (key == "friendly_name") {
            friendly = value;
        } else if (key == "command") {
            m.command_template = value;
        } else if (key == "type") {
            auto t = parse_tool_type(value);
            if (!t) manifest_error(key, "expected collection, analysis or other, got '" + value + "'");
            m.tool_type = *t;
        } else if (key == "parameter") {
            m.parameter = value;
        } else if (key == "output_file") {
            if (value.empty()) manifest_error(key, "must not be empty");
            m.output_file = value;
        } else if (key == "category") {
            m.category = value;
        } else if (key == "platform") {
            auto p = parse_platform(value);
            if (!p) manifest_error(key, "expected win or unix, got '" + value + "'");
            m.platform = *p;
            have_platform = true;
        } else if (key == "in_batch_menu") {
            m.in_batch_menu = parse_bool(key, value);
        } else if (key == "in_right_click_menu") {
            m.in_right_click_menu = parse_bool(key, value);
        } else if (key == "param") {
            auto parts = split_bar(value);
            if (parts.size() < 3 || parts.size() > 4) manifest_error(key, "expected key|label|kind|default");
            ParamSpec p;
            p.key = parts[0];
            p.label = parts[1];
            if (p.key.empty()) manifest_error(key, "empty parameter key");
            if (parts[2] == "text")
                p.kind = ParamKind::text;
            else if (parts[2] == "flag")
                p.kind = ParamKind::flag;
            else if (parts[2] == "path")
                p.kind = ParamKind::path;
            else
                manifest_error(key, "unknown parameter kind '" + parts[2] + "'");
            if (parts.size() == 4) p.default_value = parts[3];
            if (p.kind == ParamKind::flag && p.default_value && *p.default_value != "true" &&
                *p.default_value != "false")
                manifest_error(key, "flag default must be true or false");
            for (const auto& other : m.param_form)
                if (other.key == p.key) manifest_error(key, "duplicate parameter key '" + p.key + "'");
            m.param_form.push_back(std::move(p));
        } else {
            fail(ErrorCode::manifest, "manifest line " + std::to_string(line_no) + ": unknown key `" + key + "`");
        }
    }

    if (m.id.empty()) manifest_error("id", "missing");
    if (m.command_template.empty()) manifest_error("command", "missing");
    if (!have_platform) manifest_error("platform", "missing");
    m.name = name.value_or(m.id);
    m.friendly_name = friendly.value_or(m.name);
    if (tokenize_command(m.command_template).empty()) manifest_error("command", "empty command");
    check_command_placeholders(m);
    return m;
}

ScanResult scan_tool_dir(const fs::path& dir) {
    ScanResult out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        out.diagnostics.push_back("tool directory not found: " + dir.string());
        return out;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".tool") files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    std::set<std::string> ids;
    for (const auto& f : files) {
        try {
            std::ifstream in(f, std::ios::binary);
            if (!in) fail(ErrorCode::io, "cannot read");
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            ToolManifest m = parse_manifest(text);
            m.source_dir = fs::absolute(dir);
            if (!ids.insert(m.id).second) {
                out.diagnostics.push_back(f.filename().string() + ": duplicate tool id '" + m.id + "' ignored");
                continue;
            }
            out.tools.push_back(std::move(m));
        } catch (const Error& e) {
            out.diagnostics.push_back(f.filename().string() + ": " + e.what());
        }
    }
    return out;
}

bool ToolFilter::matches(const ToolManifest& m) const {
    if (tool_type && m.tool_type != *tool_type) return false;
    if (platform && m.platform != *platform) return false;
    if (in_batch_menu && m.in_batch_menu != *in_batch_menu) return false;
    if (in_right_click_menu && m.in_right_click_menu != *in_right_click_menu) return false;
    return true;
}

ToolRegistry::ToolRegistry(const std::vector<ToolManifest>& tools) {
    for (const auto& t : tools) register_tool(t);
}

void ToolRegistry::register_tool(ToolManifest manifest) {
    if (manifest.id.empty()) manifest_error("id", "missing");
    auto id = manifest.id;
    if (!tools_.emplace(id, std::move(manifest)).second) manifest_error("id", "duplicate tool id '" + id + "'");
}

const ToolManifest* ToolRegistry::lookup(std::string_view id) const {
    auto it = tools_.find(id);
    return it == tools_.end() ? nullptr : &it->second;
}

std::vector<ToolManifest> ToolRegistry::list(const ToolFilter& filter) const {
    std::vector<ToolManifest> out;
    for (const auto& [_, m] : tools_)
        if (filter.matches(m)) out.push_back(m);
    std::stable_sort(out.begin(), out.end(), [](const ToolManifest& a, const ToolManifest& b) {
        if (a.friendly_name != b.friendly_name) return a.friendly_name < b.friendly_name;
        return a.id < b.id;
    });
    return out;
}

}  // namespace ftk
