#include <chrono>

#include "ftklipse/digest.hpp"
#include "ftklipse/process.hpp"
#include "ftklipse/toolkit.hpp"

namespace ftk {

namespace fs = std::filesystem;

Platform current_platform() {
#if defined(_WIN32)
    return Platform::win;
#elif defined(__unix__) || defined(__APPLE__)
    return Platform::unix;
#else
    fail(ErrorCode::platform, "unsupported host platform");
#endif
}

namespace {

// Replaces every `{name}` in `s` through `lookup`.
template <typename F>
std::string substitute(std::string_view s, F&& lookup) {
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto open = s.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(s.substr(pos));
            break;
        }
        auto close = s.find('}', open + 1);
        if (close == std::string_view::npos)
            fail(ErrorCode::manifest, "manifest field `command`: unterminated placeholder");
        out.append(s.substr(pos, open - pos));
        out += lookup(s.substr(open + 1, close - open - 1));
        pos = close + 1;
    }
    return out;
}

}  // namespace

InvocationPlan plan_invocation(const ToolManifest& manifest, const Evidence& evidence,
                               const std::map<std::string, std::string>& params, const fs::path& case_dir,
                               std::optional<Platform> host) {
    Platform here = host ? *host : current_platform();
    if (manifest.platform != here)
        fail(ErrorCode::platform, "tool '" + manifest.id + "' runs on " + std::string(to_string(manifest.platform)) +
                                      ", host is " + std::string(to_string(here)));

    std::map<std::string, std::string, std::less<>> values;
    std::map<std::string, ParamKind, std::less<>> kinds;
    for (const auto& p : manifest.param_form) {
        kinds[p.key] = p.kind;
        auto given = params.find(p.key);
        if (given != params.end())
            values[p.key] = given->second;
        else if (p.default_value)
            values[p.key] = *p.default_value;
        else
            fail(ErrorCode::validation, "tool '" + manifest.id + "' requires parameter '" + p.key + "'");
        if (p.kind == ParamKind::flag && values[p.key] != "true" && values[p.key] != "false")
            fail(ErrorCode::validation, "parameter '" + p.key + "' is a flag; expected true or false");
    }
    for (const auto& [k, _] : params)
        if (!kinds.contains(k)) fail(ErrorCode::validation, "tool '" + manifest.id + "' has no parameter '" + k + "'");

    InvocationPlan plan;
    plan.tool_id = manifest.id;
    plan.evidence_id = evidence.id;
    plan.working_dir = case_dir;

    const fs::path evidence_path = case_dir.parent_path() / evidence.managed_path;
    if (manifest.output_file) {
        std::string rendered = substitute(*manifest.output_file, [&](std::string_view name) -> std::string {
            if (name == "evidence_id") return std::to_string(evidence.id);
            if (name == "evidence_name") return evidence.original_name;
            if (name == "tool_id") return manifest.id;
            fail(ErrorCode::manifest, "manifest field `output_file`: unknown placeholder {" + std::string(name) + "}");
        });
        plan.output_path = case_dir / "tool_output" / sanitize_file_name(rendered);
    }

    for (const auto& token : tokenize_command(manifest.command_template)) {
        bool drop = false;
        std::string arg = substitute(token, [&](std::string_view name) -> std::string {
            if (name == "evidence_path") return evidence_path.string();
            if (name == "case_dir") return case_dir.string();
            if (name == "output_path") {
                if (!plan.output_path) fail(ErrorCode::manifest, "manifest field `command`: {output_path} without output_file");
                return plan.output_path->string();
            }
            if (name.starts_with("param:")) {
                auto key = name.substr(6);
                auto it = values.find(key);
                if (it == values.end())
                    fail(ErrorCode::manifest, "manifest field `command`: undeclared parameter {" + std::string(name) + "}");
                if (kinds.find(key)->second == ParamKind::flag) {
                    // A false flag removes its whole token; a true flag contributes nothing itself.
                    if (it->second == "false") drop = true;
                    return {};
                }
                return it->second;
            }
            fail(ErrorCode::manifest, "manifest field `command`: unknown placeholder {" + std::string(name) + "}");
        });
        if (drop) continue;
        plan.argv.push_back(std::move(arg));
    }
    if (plan.argv.empty()) fail(ErrorCode::manifest, "manifest field `command`: empty after substitution");

    std::string& exe = plan.argv[0];
    if (exe.find('/') != std::string::npos) {
        if (fs::path(exe).is_relative() && !manifest.source_dir.empty()) exe = (manifest.source_dir / exe).string();
    } else if (auto found = find_executable(exe); !found.empty()) {
        exe = found.string();
    }
    return plan;
}

ToolRunResult run_tool(Casework& casework, const InvocationPlan& plan, const std::string& principal) {
    if (plan.timeout_s < 1) fail(ErrorCode::validation, "timeout must be a positive number of seconds");
    // Fails with not_found before anything runs.
    Evidence input = casework.get_evidence(plan.evidence_id);

    if (plan.output_path) {
        std::error_code ec;
        fs::create_directories(plan.output_path->parent_path(), ec);
        fs::remove(*plan.output_path, ec);
    }

    ToolRunResult result;
    ProcessOptions opts;
    opts.working_dir = plan.working_dir;
    opts.timeout = std::chrono::seconds(plan.timeout_s);
    opts.output_cap = kToolOutputCap;

    std::optional<Error> launch_error;
    bool timed_out = false;
    result.started_at = now_utc_ms();
    try {
        ProcessResult pr = run_process(plan.argv, opts);
        result.exit_code = pr.exit_code;
        result.stdout_text = std::move(pr.stdout_text);
        result.stderr_text = std::move(pr.stderr_text);
        result.stdout_truncated = pr.stdout_truncated;
        result.stderr_truncated = pr.stderr_truncated;
        timed_out = pr.timed_out;
    } catch (const Error& e) {
        launch_error = e;
    }
    result.finished_at = now_utc_ms();

    try {
        result.post_verification = casework.check_integrity(plan.evidence_id);
    } catch (const Error&) {
        result.post_verification.ok = false;
        result.post_verification.expected_hash = input.reference_hash;
        result.post_verification.checked_at = now_utc_ms();
    }

    std::string detail = "tool=" + plan.tool_id;
    if (launch_error) {
        detail += " launch failed: " + std::string(launch_error->what());
    } else if (timed_out) {
        detail += " timeout after " + std::to_string(plan.timeout_s) + "s";
    } else {
        detail += " exit=" + std::to_string(result.exit_code);
    }

    std::optional<std::string> import_failure;
    if (!launch_error && plan.output_path) {
        std::error_code ec;
        if (fs::is_regular_file(*plan.output_path, ec)) {
            try {
                Evidence child = casework.import_derived(
                    plan.evidence_id, *plan.output_path, plan.output_path->filename().string(), principal,
                    "output of tool " + plan.tool_id + " on evidence " + std::to_string(plan.evidence_id));
                result.output_evidence_id = child.id;
            } catch (const Error& e) {
                import_failure = e.what();
            }
        }
        detail += " output=" + plan.output_path->string();
        if (result.output_evidence_id) detail += " child=" + std::to_string(*result.output_evidence_id);
        if (import_failure) detail += " output import failed";
    }
    if (result.stdout_truncated) detail += " stdout truncated";
    if (result.stderr_truncated) detail += " stderr truncated";
    detail += result.post_verification.ok ? " verify=ok" : " verify=MISMATCH";

    casework.record_event(plan.evidence_id, principal, CustodyOperation::tool_run, detail);

    if (launch_error) throw ToolRunError(ErrorCode::launch, launch_error->what(), result);
    if (timed_out)
        throw ToolRunError(ErrorCode::timeout,
                           "tool '" + plan.tool_id + "' exceeded " + std::to_string(plan.timeout_s) + "s timeout",
                           result);
    return result;
}

}  // namespace ftk
