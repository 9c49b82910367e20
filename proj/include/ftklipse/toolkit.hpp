#pragma once

// Manifest-registered external tools. A manifest is a `key = value` text
// file (`tools.d/*.tool`); tools are executed without a shell and every run
// re-verifies the input evidence afterwards.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftklipse/casework.hpp"
#include "ftklipse/error.hpp"

namespace ftk {

enum class ToolType { collection, analysis, other };
enum class Platform { win, unix };
enum class ParamKind { text, flag, path };

std::string_view to_string(ToolType t) noexcept;
std::string_view to_string(Platform p) noexcept;
std::string_view to_string(ParamKind k) noexcept;
std::optional<ToolType> parse_tool_type(std::string_view s) noexcept;
std::optional<Platform> parse_platform(std::string_view s) noexcept;

struct ParamSpec {
    std::string key;
    std::string label;
    ParamKind kind = ParamKind::text;
    std::optional<std::string> default_value;

    friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct ToolManifest {
    std::string id;
    std::string name;
    std::string friendly_name;
    std::string command_template;
    ToolType tool_type = ToolType::other;
    std::optional<std::string> parameter;
    std::optional<std::string> output_file;
    std::optional<std::string> category;
    Platform platform = Platform::unix;
    bool in_batch_menu = false;
    bool in_right_click_menu = false;
    std::vector<ParamSpec> param_form;
    std::filesystem::path source_dir;  // relative executables resolve here

    friend bool operator==(const ToolManifest&, const ToolManifest&) = default;
};

/// Throws ErrorCode::manifest naming the offending field.
ToolManifest parse_manifest(std::string_view text);

struct ScanResult {
    std::vector<ToolManifest> tools;
    std::vector<std::string> diagnostics;
};

/// Parses every `*.tool` in lexicographic filename order. Bad manifests and
/// duplicate ids (first wins) are reported, never fatal.
ScanResult scan_tool_dir(const std::filesystem::path& dir);

struct ToolFilter {
    std::optional<ToolType> tool_type;
    std::optional<Platform> platform;
    std::optional<bool> in_batch_menu;
    std::optional<bool> in_right_click_menu;

    bool matches(const ToolManifest& m) const;
};

class ToolRegistry {
public:
    ToolRegistry() = default;
    explicit ToolRegistry(const std::vector<ToolManifest>& tools);

    /// Throws manifest error on empty or duplicate id.
    void register_tool(ToolManifest manifest);
    const ToolManifest* lookup(std::string_view id) const;
    /// Sorted by friendly_name, then id.
    std::vector<ToolManifest> list(const ToolFilter& filter = {}) const;
    std::size_t size() const { return tools_.size(); }

private:
    std::map<std::string, ToolManifest, std::less<>> tools_;
};

/// Throws ErrorCode::platform on unsupported hosts.
Platform current_platform();

inline constexpr int kDefaultToolTimeoutS = 300;
inline constexpr std::size_t kToolOutputCap = 10u << 20;

struct InvocationPlan {
    std::string tool_id;
    std::vector<std::string> argv;
    std::filesystem::path working_dir;
    std::uint64_t evidence_id = 0;
    std::optional<std::filesystem::path> output_path;
    int timeout_s = kDefaultToolTimeoutS;
};

/// Splits a command template into argv tokens (whitespace separated,
/// double quotes group). Placeholders stay inside their token.
std::vector<std::string> tokenize_command(std::string_view command);

/// Substitutes `{evidence_path}`, `{output_path}`, `{case_dir}` and
/// `{param:<key>}`. Evidence paths are `case_dir.parent_path() / managed_path`.
InvocationPlan plan_invocation(const ToolManifest& manifest, const Evidence& evidence,
                               const std::map<std::string, std::string>& params,
                               const std::filesystem::path& case_dir,
                               std::optional<Platform> host = std::nullopt);

struct ToolRunResult {
    int exit_code = -1;
    std::string stdout_text;
    std::string stderr_text;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
    TimestampMs started_at = 0;
    TimestampMs finished_at = 0;
    VerificationResult post_verification;
    std::optional<std::uint64_t> output_evidence_id;
};

/// Launch failures and timeouts. The run was still recorded in custody and
/// the evidence re-verified; `result()` carries that.
class ToolRunError : public Error {
public:
    ToolRunError(ErrorCode code, const std::string& message, ToolRunResult result)
        : Error(code, message), result_(std::move(result)) {}
    const ToolRunResult& result() const { return result_; }

private:
    ToolRunResult result_;
};

/// Executes the plan, appends exactly one `tool_run` event to the input
/// evidence, re-verifies it, and imports a produced output file as a child.
/// Non-zero exit codes are results, not errors.
ToolRunResult run_tool(Casework& casework, const InvocationPlan& plan, const std::string& principal);

}  // namespace ftk
