#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ftklipse/casework.hpp"

namespace ftk {

struct Excerpt {
    std::uint64_t evidence_id = 0;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::string caption;

    friend bool operator==(const Excerpt&, const Excerpt&) = default;
};

struct ReportSelection {
    std::string title;
    std::vector<std::uint64_t> include_evidence_ids;  // empty: every evidence of the case
    std::vector<Excerpt> excerpts;
    bool include_notes = true;
    bool include_custody = true;
};

struct ReportSpec {
    std::uint64_t case_id = 0;
    std::string title;
    FrontMatter front_matter;
    std::vector<std::uint64_t> include_evidence_ids;
    std::vector<Excerpt> excerpts;
    bool include_notes = true;
    bool include_custody = true;
    TimestampMs generated_at = 0;
};

inline constexpr std::uint64_t kExcerptCap = 1u << 20;

/// Validates the selection against the case and appends one
/// `exported_to_report` event to every included evidence.
ReportSpec build_report_spec(Casework& casework, std::uint64_t case_id, const ReportSelection& selection,
                             const FrontMatter& front_matter, const std::string& principal,
                             std::optional<TimestampMs> generated_at = std::nullopt);

class ReportGenerator {
public:
    virtual ~ReportGenerator() = default;
    virtual std::string_view format_id() const = 0;
    virtual std::string_view file_extension() const = 0;
    /// Deterministic in (spec, case snapshot, evidence bytes).
    virtual std::string generate(const ReportSpec& spec, const Case& snapshot,
                                 const std::filesystem::path& data_root) const = 0;
};

/// "latex" or "html"; anything else throws unsupported_format.
std::unique_ptr<ReportGenerator> generator_for(std::string_view format_id);

std::string latex_escape(std::string_view text);
std::string html_escape(std::string_view text);

/// `data/<case_id>/reports/<compact timestamp>.<ext>`
std::filesystem::path report_path(const Casework& casework, const ReportSpec& spec, std::string_view ext);

/// Generates and writes a latex/html report; returns the written path.
std::filesystem::path write_report(Casework& casework, const ReportSpec& spec, std::string_view format_id);

/// Writes the LaTeX source then compiles it with `latex_bin`. The .tex
/// file is kept even when the toolchain is missing (unavailable) or the
/// compile fails (generation, message carries the log tail).
std::filesystem::path render_pdf(Casework& casework, const ReportSpec& spec, const std::string& latex_bin = "pdflatex");

}  // namespace ftk
