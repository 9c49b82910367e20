#include "ftklipse/json_io.hpp"

namespace ftk {

json to_json(const CustodyEvent& e) {
    return {{"seq", e.seq},
            {"principal", e.principal},
            {"timestamp", e.timestamp},
            {"timestamp_iso", format_iso8601(e.timestamp)},
            {"operation", to_string(e.operation)},
            {"detail", e.detail}};
}

json to_json(const Note& n) {
    json j = {{"id", n.id}, {"author", n.author}, {"created_at", n.created_at}, {"text", n.text}};
    j["region"] = n.region ? json{{"offset", n.region->offset}, {"length", n.region->length}} : json(nullptr);
    return j;
}

json to_json(const Evidence& e) {
    json notes = json::array(), custody = json::array();
    for (const auto& n : e.notes) notes.push_back(to_json(n));
    for (const auto& c : e.custody) custody.push_back(to_json(c));
    return {{"id", e.id},
            {"case_id", e.case_id},
            {"original_name", e.original_name},
            {"managed_path", e.managed_path},
            {"size_bytes", e.size_bytes},
            {"hash_algorithm", e.hash_algorithm},
            {"reference_hash", e.reference_hash},
            {"imported_at", e.imported_at},
            {"parent_evidence_id", e.parent_evidence_id ? json(*e.parent_evidence_id) : json(nullptr)},
            {"notes", notes},
            {"custody", custody}};
}

json to_json(const Case& c) {
    json evidences = json::array();
    for (const auto& e : c.evidences) evidences.push_back(to_json(e));
    return {{"id", c.id},
            {"title", c.title},
            {"created_at", c.created_at},
            {"investigator", c.investigator},
            {"evidences", evidences},
            {"front_matter",
             {{"executive_summary", c.front_matter.executive_summary},
              {"introduction", c.front_matter.introduction},
              {"conclusion", c.front_matter.conclusion}}}};
}

json to_json(const VerificationResult& v) {
    return {{"ok", v.ok}, {"expected_hash", v.expected_hash}, {"actual_hash", v.actual_hash}, {"checked_at", v.checked_at}};
}

json to_json(const ToolManifest& m) {
    json form = json::array();
    for (const auto& p : m.param_form)
        form.push_back({{"key", p.key},
                        {"label", p.label},
                        {"kind", to_string(p.kind)},
                        {"default", p.default_value ? json(*p.default_value) : json(nullptr)}});
    auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
    return {{"id", m.id},
            {"name", m.name},
            {"friendly_name", m.friendly_name},
            {"command", m.command_template},
            {"type", to_string(m.tool_type)},
            {"parameter", opt(m.parameter)},
            {"output_file", opt(m.output_file)},
            {"category", opt(m.category)},
            {"platform", to_string(m.platform)},
            {"in_batch_menu", m.in_batch_menu},
            {"in_right_click_menu", m.in_right_click_menu},
            {"param_form", form}};
}

json to_json(const ToolRunResult& r) {
    return {{"exit_code", r.exit_code},
            {"stdout", r.stdout_text},
            {"stderr", r.stderr_text},
            {"stdout_truncated", r.stdout_truncated},
            {"stderr_truncated", r.stderr_truncated},
            {"started_at", r.started_at},
            {"finished_at", r.finished_at},
            {"post_verification", to_json(r.post_verification)},
            {"output_evidence_id", r.output_evidence_id ? json(*r.output_evidence_id) : json(nullptr)}};
}

json to_json(const InvocationPlan& p) {
    return {{"tool_id", p.tool_id},
            {"argv", p.argv},
            {"working_dir", p.working_dir.string()},
            {"evidence_id", p.evidence_id},
            {"output_path", p.output_path ? json(p.output_path->string()) : json(nullptr)},
            {"timeout_s", p.timeout_s}};
}

json error_json(ErrorCode code, const std::string& message) {
    return {{"error", {{"code", to_string(code)}, {"message", message}}}};
}

std::string dump_json(const json& j, int indent) {
    return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

FrontMatter front_matter_from_json(const json& j) {
    FrontMatter fm;
    if (!j.is_object()) return fm;
    fm.executive_summary = j.value("executive_summary", "");
    fm.introduction = j.value("introduction", "");
    fm.conclusion = j.value("conclusion", "");
    return fm;
}

ReportSelection selection_from_json(const json& j) {
    ReportSelection s;
    s.title = j.value("title", "");
    if (j.contains("include_evidence_ids"))
        s.include_evidence_ids = j.at("include_evidence_ids").get<std::vector<std::uint64_t>>();
    if (j.contains("excerpts")) {
        for (const auto& x : j.at("excerpts"))
            s.excerpts.push_back(Excerpt{x.at("evidence_id").get<std::uint64_t>(), x.at("offset").get<std::uint64_t>(),
                                         x.at("length").get<std::uint64_t>(), x.value("caption", "")});
    }
    s.include_notes = j.value("include_notes", true);
    s.include_custody = j.value("include_custody", true);
    return s;
}

}  // namespace ftk
