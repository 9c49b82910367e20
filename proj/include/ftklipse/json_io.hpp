#pragma once

// JSON views of the domain types shared by the HTTP service and `--json`
// CLI output.

#include <json.hpp>

#include "ftklipse/casework.hpp"
#include "ftklipse/reporting.hpp"
#include "ftklipse/toolkit.hpp"

namespace ftk {

using json = nlohmann::json;

json to_json(const CustodyEvent& e);
json to_json(const Note& n);
json to_json(const Evidence& e);
json to_json(const Case& c);
json to_json(const VerificationResult& v);
json to_json(const ToolManifest& m);
json to_json(const ToolRunResult& r);
json to_json(const InvocationPlan& p);

/// Error envelope: {"error": {"code": ..., "message": ...}}
json error_json(ErrorCode code, const std::string& message);

/// Replaces invalid UTF-8 instead of throwing.
std::string dump_json(const json& j, int indent = -1);

FrontMatter front_matter_from_json(const json& j);
ReportSelection selection_from_json(const json& j);

}  // namespace ftk
