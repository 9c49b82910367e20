#include "ftklipse/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "ftklipse/error.hpp"
#include "ftklipse/process.hpp"
#include "ftklipse/rendering.hpp"

namespace ftk {

namespace fs = std::filesystem;

namespace {

// Decodes UTF-8 (lossy) into code points.
std::u32string code_points(std::string_view text) {
    std::string clean = render_unicode(as_bytes(text), "utf-8");
    std::u32string out;
    for (std::size_t i = 0; i < clean.size();) {
        auto b = static_cast<unsigned char>(clean[i]);
        int n = b < 0x80 ? 1 : b < 0xE0 ? 2 : b < 0xF0 ? 3 : 4;
        char32_t cp = n == 1 ? b : n == 2 ? (b & 0x1F) : n == 3 ? (b & 0x0F) : (b & 0x07);
        for (int k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(clean[i + k]) & 0x3F);
        out.push_back(cp);
        i += static_cast<std::size_t>(n);
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        // Only Latin-1 code points reach here in LaTeX output.
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string latex_escape_impl(std::string_view text, bool hard_spaces) {
    std::string out;
    out.reserve(text.size() + 16);
    for (char32_t cp : code_points(text)) {
        switch (cp) {
            case '\\': out += "\\textbackslash{}"; break;
            case '{': out += "\\{"; break;
            case '}': out += "\\}"; break;
            case '#': out += "\\#"; break;
            case '$': out += "\\$"; break;
            case '%': out += "\\%"; break;
            case '&': out += "\\&"; break;
            case '_': out += "\\_"; break;
            case '~': out += "\\textasciitilde{}"; break;
            case '^': out += "\\textasciicircum{}"; break;
            case '<': out += "\\textless{}"; break;
            case '>': out += "\\textgreater{}"; break;
            case '|': out += "\\textbar{}"; break;
            case '[': out += "{[}"; break;
            case ']': out += "{]}"; break;
            case ' ': out += hard_spaces ? "~" : " "; break;
            default:
                if (cp < 0x20 || cp == 0x7f) {
                    out += hard_spaces ? "~" : " ";
                } else if (cp < 0x80) {
                    out.push_back(static_cast<char>(cp));
                } else if (cp >= 0xC0 && cp <= 0xFF) {
                    append_utf8(out, cp);
                } else {
                    char buf[24];
                    std::snprintf(buf, sizeof buf, "{[}U+%04X{]}", static_cast<unsigned>(cp));
                    out += buf;
                }
        }
    }
    return out;
}

std::vector<std::string> paragraphs(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            if (!cur.empty()) cur += ' ';
            cur += line;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

bool overlaps(const Region& r, const Excerpt& x) {
    if (r.length == 0 || x.length == 0) return false;
    return r.offset < x.offset + x.length && x.offset < r.offset + r.length;
}

struct EvidenceView {
    const Evidence* evidence;
    std::vector<std::pair<const Excerpt*, std::string>> excerpts;  // rendered hex
};

// Shared, format-independent preparation: resolves included evidences in
// spec order and renders every excerpt through the canonical hex layout.
std::vector<EvidenceView> prepare(const ReportSpec& spec, const Case& snapshot, const fs::path& data_root) {
    std::vector<EvidenceView> out;
    for (auto id : spec.include_evidence_ids) {
        const Evidence* e = snapshot.find_evidence(id);
        if (!e) fail(ErrorCode::generation, "evidence " + std::to_string(id) + " is not part of case " +
                                                std::to_string(snapshot.id));
        EvidenceView view{e, {}};
        for (const auto& x : spec.excerpts) {
            if (x.evidence_id != id) continue;
            try {
                Bytes window = slice_evidence(*e, data_root, x.offset, x.length);
                view.excerpts.emplace_back(&x, render_hex(window, x.offset));
            } catch (const Error& err) {
                fail(ErrorCode::generation, "cannot read excerpt of evidence " + std::to_string(id) + " (" +
                                                e->original_name + "): " + err.what());
            }
        }
        out.push_back(std::move(view));
    }
    return out;
}

std::string region_text(const Region& r) {
    return "offset " + std::to_string(r.offset) + ", length " + std::to_string(r.length);
}

class LatexGenerator final : public ReportGenerator {
public:
    std::string_view format_id() const override { return "latex"; }
    std::string_view file_extension() const override { return "tex"; }

    std::string generate(const ReportSpec& spec, const Case& snapshot, const fs::path& data_root) const override {
        auto views = prepare(spec, snapshot, data_root);
        std::string d;
        auto esc = [](std::string_view s) { return latex_escape(s); };
        auto body = [&](const std::string& heading, const std::string& text) {
            d += "\\section*{" + heading + "}\n";
            auto paras = paragraphs(text);
            if (paras.empty()) d += "\\emph{(none)}\n";
            for (const auto& p : paras) d += esc(p) + "\n\n";
        };

        d += "\\documentclass[a4paper,11pt]{article}\n";
        d += "\\usepackage[T1]{fontenc}\n\\usepackage[utf8]{inputenc}\n";
        d += "\\usepackage[margin=2cm]{geometry}\n\\usepackage{longtable}\n\\usepackage{array}\n";
        d += "\\begin{document}\n";
        d += "\\title{" + esc(spec.title) + "}\n";
        d += "\\author{" + esc(snapshot.investigator) + "}\n";
        d += "\\date{" + esc(format_iso8601(spec.generated_at)) + "}\n";
        d += "\\maketitle\n\n";
        d += "\\begin{tabular}{@{}ll@{}}\n";
        d += "Case & " + std::to_string(snapshot.id) + ": " + esc(snapshot.title) + " \\\\\n";
        d += "Investigator & " + esc(snapshot.investigator) + " \\\\\n";
        d += "Case opened & " + esc(format_iso8601(snapshot.created_at)) + " \\\\\n";
        d += "Report generated & " + esc(format_iso8601(spec.generated_at)) + " \\\\\n";
        d += "\\end{tabular}\n\n";

        body("Executive Summary", spec.front_matter.executive_summary);
        body("Introduction", spec.front_matter.introduction);

        for (const auto& v : views) {
            const Evidence& e = *v.evidence;
            d += "\\section{Evidence " + std::to_string(e.id) + ": " + esc(e.original_name) + "}\n";
            d += "\\begin{tabular}{|l|p{12cm}|}\n\\hline\n";
            d += "Original name & " + esc(e.original_name) + " \\\\\n";
            d += "Size & " + std::to_string(e.size_bytes) + " bytes \\\\\n";
            d += "Hash algorithm & " + esc(e.hash_algorithm) + " \\\\\n";
            d += "Digest & \\texttt{\\small " + esc(e.reference_hash) + "} \\\\\n";
            d += "Imported & " + esc(format_iso8601(e.imported_at)) + " \\\\\n";
            if (e.parent_evidence_id) d += "Derived from & evidence " + std::to_string(*e.parent_evidence_id) + " \\\\\n";
            d += "\\hline\n\\end{tabular}\n\n";

            for (const auto& [x, hex] : v.excerpts) {
                std::string caption = x->caption.empty() ? "Excerpt" : x->caption;
                d += "\\subsection*{" + esc(caption) + " (" + region_text({x->offset, x->length}) + ")}\n";
                d += "% begin-excerpt\n\\begin{flushleft}\\ttfamily\\small\n";
                std::istringstream lines(hex);
                std::string line;
                while (std::getline(lines, line)) d += latex_escape_impl(line, true) + "\\\\\n";
                d += "\\end{flushleft}\n% end-excerpt\n";
            }

            if (spec.include_notes) {
                d += "\\subsection*{Notes}\n";
                if (e.notes.empty()) {
                    d += "\\emph{No notes.}\n\n";
                } else {
                    d += "\\begin{itemize}\n";
                    for (const auto& n : e.notes) {
                        d += "\\item{} \\textbf{" + esc(n.author) + "}, " + esc(format_iso8601(n.created_at));
                        if (n.region) {
                            d += " (" + region_text(*n.region) + ")";
                            bool flagged = std::any_of(v.excerpts.begin(), v.excerpts.end(),
                                                       [&](const auto& p) { return overlaps(*n.region, *p.first); });
                            if (flagged) d += " \\emph{overlaps excerpt}";
                        }
                        d += ": " + esc(n.text) + "\n";
                    }
                    d += "\\end{itemize}\n";
                }
            }

            if (spec.include_custody) {
                d += "\\subsection*{Chain of Custody}\n";
                d += "\\begin{longtable}{|l|l|l|p{6.5cm}|}\n\\hline\n";
                d += "\\textbf{Principal} & \\textbf{Timestamp (UTC)} & \\textbf{Operation} & \\textbf{Detail} \\\\\n"
                     "\\hline\n\\endhead\n";
                for (const auto& ev : e.custody) {
                    d += esc(ev.principal) + " & " + esc(format_iso8601(ev.timestamp)) + " & " +
                         esc(to_string(ev.operation)) + " & " + esc(ev.detail) + " \\\\ % custody " +
                         std::to_string(e.id) + ":" + std::to_string(ev.seq) + "\n";
                }
                d += "\\hline\n\\end{longtable}\n";
            }
        }

        body("Conclusion", spec.front_matter.conclusion);
        d += "\\end{document}\n";
        return d;
    }
};

class HtmlGenerator final : public ReportGenerator {
public:
    std::string_view format_id() const override { return "html"; }
    std::string_view file_extension() const override { return "html"; }

    std::string generate(const ReportSpec& spec, const Case& snapshot, const fs::path& data_root) const override {
        auto views = prepare(spec, snapshot, data_root);
        auto esc = [](std::string_view s) { return html_escape(s); };
        std::string d;
        auto body = [&](const char* cls, const char* heading, const std::string& text) {
            d += std::string("<section class=\"") + cls + "\">\n<h2>" + heading + "</h2>\n";
            auto paras = paragraphs(text);
            if (paras.empty()) d += "<p><em>(none)</em></p>\n";
            for (const auto& p : paras) d += "<p>" + esc(p) + "</p>\n";
            d += "</section>\n";
        };

        d += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
        d += "<title>" + esc(spec.title) + "</title>\n";
        d += "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
             "table{border-collapse:collapse}td,th{border:1px solid #999;padding:2px 6px;text-align:left}"
             "pre.hex{font-size:90%;background:#f4f4f4;padding:0.5em}</style>\n";
        d += "</head>\n<body>\n";
        d += "<header class=\"title-page\">\n<h1>" + esc(spec.title) + "</h1>\n<dl>\n";
        d += "<dt>Case</dt><dd>" + std::to_string(snapshot.id) + ": " + esc(snapshot.title) + "</dd>\n";
        d += "<dt>Investigator</dt><dd>" + esc(snapshot.investigator) + "</dd>\n";
        d += "<dt>Case opened</dt><dd>" + format_iso8601(snapshot.created_at) + "</dd>\n";
        d += "<dt>Report generated</dt><dd>" + format_iso8601(spec.generated_at) + "</dd>\n";
        d += "</dl>\n</header>\n";

        body("executive-summary", "Executive Summary", spec.front_matter.executive_summary);
        body("introduction", "Introduction", spec.front_matter.introduction);

        for (const auto& v : views) {
            const Evidence& e = *v.evidence;
            d += "<section class=\"evidence\" data-evidence-id=\"" + std::to_string(e.id) + "\">\n";
            d += "<h2>Evidence " + std::to_string(e.id) + ": " + esc(e.original_name) + "</h2>\n";
            d += "<table class=\"metadata\">\n";
            d += "<tr><th>Original name</th><td>" + esc(e.original_name) + "</td></tr>\n";
            d += "<tr><th>Size</th><td>" + std::to_string(e.size_bytes) + " bytes</td></tr>\n";
            d += "<tr><th>Hash algorithm</th><td>" + esc(e.hash_algorithm) + "</td></tr>\n";
            d += "<tr><th>Digest</th><td><code>" + esc(e.reference_hash) + "</code></td></tr>\n";
            d += "<tr><th>Imported</th><td>" + format_iso8601(e.imported_at) + "</td></tr>\n";
            if (e.parent_evidence_id)
                d += "<tr><th>Derived from</th><td>evidence " + std::to_string(*e.parent_evidence_id) + "</td></tr>\n";
            d += "</table>\n";

            for (const auto& [x, hex] : v.excerpts) {
                std::string caption = x->caption.empty() ? "Excerpt" : x->caption;
                d += "<div class=\"excerpt\">\n<h3>" + esc(caption) + " (" + region_text({x->offset, x->length}) +
                     ")</h3>\n<pre class=\"hex\">" + esc(hex) + "</pre>\n</div>\n";
            }

            if (spec.include_notes) {
                d += "<h3>Notes</h3>\n";
                if (e.notes.empty()) {
                    d += "<p><em>No notes.</em></p>\n";
                } else {
                    d += "<ul class=\"notes\">\n";
                    for (const auto& n : e.notes) {
                        d += "<li data-note-id=\"" + std::to_string(n.id) + "\"><strong>" + esc(n.author) + "</strong>, " +
                             format_iso8601(n.created_at);
                        if (n.region) {
                            d += " (" + region_text(*n.region) + ")";
                            bool flagged = std::any_of(v.excerpts.begin(), v.excerpts.end(),
                                                       [&](const auto& p) { return overlaps(*n.region, *p.first); });
                            if (flagged) d += " <em class=\"overlap\">overlaps excerpt</em>";
                        }
                        d += ": " + esc(n.text) + "</li>\n";
                    }
                    d += "</ul>\n";
                }
            }

            if (spec.include_custody) {
                d += "<h3>Chain of Custody</h3>\n<table class=\"custody\">\n";
                d += "<tr><th>Principal</th><th>Timestamp (UTC)</th><th>Operation</th><th>Detail</th></tr>\n";
                for (const auto& ev : e.custody) {
                    d += "<tr class=\"custody-event\" data-seq=\"" + std::to_string(ev.seq) + "\"><td>" +
                         esc(ev.principal) + "</td><td>" + format_iso8601(ev.timestamp) + "</td><td>" +
                         std::string(to_string(ev.operation)) + "</td><td>" + esc(ev.detail) + "</td></tr>\n";
                }
                d += "</table>\n";
            }
            d += "</section>\n";
        }

        body("conclusion", "Conclusion", spec.front_matter.conclusion);
        d += "</body>\n</html>\n";
        return d;
    }
};

}  // namespace

std::string latex_escape(std::string_view text) { return latex_escape_impl(text, false); }

std::string html_escape(std::string_view text) {
    std::string clean = render_unicode(as_bytes(text), "utf-8");
    std::string out;
    out.reserve(clean.size() + 16);
    for (char c : clean) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            case '\0': out += "\xEF\xBF\xBD"; break;
            default: out += c;
        }
    }
    return out;
}

std::unique_ptr<ReportGenerator> generator_for(std::string_view format_id) {
    if (format_id == "latex") return std::make_unique<LatexGenerator>();
    if (format_id == "html") return std::make_unique<HtmlGenerator>();
    fail(ErrorCode::unsupported_format,
         "unsupported report format '" + std::string(format_id) + "' (supported: latex, html)");
}

ReportSpec build_report_spec(Casework& casework, std::uint64_t case_id, const ReportSelection& selection,
                             const FrontMatter& front_matter, const std::string& principal,
                             std::optional<TimestampMs> generated_at) {
    Case c = casework.get_case(case_id);
    ReportSpec spec;
    spec.case_id = case_id;
    spec.title = trim(selection.title).empty() ? "Case " + std::to_string(case_id) + ": " + c.title : selection.title;
    spec.front_matter = front_matter;
    spec.include_notes = selection.include_notes;
    spec.include_custody = selection.include_custody;
    spec.generated_at = generated_at.value_or(now_utc_ms());

    std::set<std::uint64_t> seen;
    if (selection.include_evidence_ids.empty()) {
        for (const auto& e : c.evidences) spec.include_evidence_ids.push_back(e.id);
    } else {
        for (auto id : selection.include_evidence_ids) {
            if (!c.find_evidence(id))
                fail(ErrorCode::validation, "evidence " + std::to_string(id) + " is not part of case " +
                                                std::to_string(case_id));
            if (seen.insert(id).second) spec.include_evidence_ids.push_back(id);
        }
    }

    for (const auto& x : selection.excerpts) {
        const Evidence* e = c.find_evidence(x.evidence_id);
        if (!e)
            fail(ErrorCode::validation, "excerpt references evidence " + std::to_string(x.evidence_id) +
                                            " which is not part of case " + std::to_string(case_id));
        if (std::find(spec.include_evidence_ids.begin(), spec.include_evidence_ids.end(), x.evidence_id) ==
            spec.include_evidence_ids.end())
            fail(ErrorCode::validation, "excerpt references evidence " + std::to_string(x.evidence_id) +
                                            " which is not included in the report");
        if (x.length < 1 || x.length > kExcerptCap)
            fail(ErrorCode::validation, "excerpt length must be between 1 and " + std::to_string(kExcerptCap));
        if (x.offset > e->size_bytes || x.length > e->size_bytes - x.offset)
            fail(ErrorCode::validation, "excerpt offset=" + std::to_string(x.offset) + " length=" +
                                            std::to_string(x.length) + " exceeds evidence " +
                                            std::to_string(x.evidence_id) + " size " + std::to_string(e->size_bytes));
        spec.excerpts.push_back(x);
    }

    for (auto id : spec.include_evidence_ids)
        casework.record_event(id, principal, CustodyOperation::exported_to_report,
                              "report \"" + spec.title + "\" generated_at=" + format_iso8601(spec.generated_at));
    return spec;
}

fs::path report_path(const Casework& casework, const ReportSpec& spec, std::string_view ext) {
    fs::path dir = casework.case_dir(spec.case_id) / "reports";
    std::string stem = format_compact(spec.generated_at);
    return dir / (stem + "." + std::string(ext));
}

namespace {

fs::path unique_path(const fs::path& wanted) {
    std::error_code ec;
    if (!fs::exists(wanted, ec)) return wanted;
    for (int i = 1;; ++i) {
        fs::path p = wanted.parent_path() / (wanted.stem().string() + "-" + std::to_string(i) + wanted.extension().string());
        if (!fs::exists(p, ec)) return p;
    }
}

fs::path write_document(Casework& casework, const ReportSpec& spec, const ReportGenerator& gen) {
    Case snapshot = casework.get_case(spec.case_id);
    std::string doc = gen.generate(spec, snapshot, casework.data_root());
    fs::path path = unique_path(report_path(casework, spec, gen.file_extension()));
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    write_file(path, as_bytes(doc));
    return path;
}

}  // namespace

fs::path write_report(Casework& casework, const ReportSpec& spec, std::string_view format_id) {
    auto gen = generator_for(format_id);
    return write_document(casework, spec, *gen);
}

fs::path render_pdf(Casework& casework, const ReportSpec& spec, const std::string& latex_bin) {
    auto gen = generator_for("latex");
    fs::path tex = write_document(casework, spec, *gen);
    fs::path exe = find_executable(latex_bin);
    if (exe.empty())
        fail(ErrorCode::unavailable, "LaTeX toolchain '" + latex_bin +
                                         "' not found; install a TeX distribution (e.g. TeX Live) or pass --latex-bin. "
                                         "LaTeX source written to " + tex.string());

    ProcessOptions opts;
    opts.working_dir = tex.parent_path();
    opts.timeout = std::chrono::seconds(180);
    std::vector<std::string> argv{exe.string(), "-interaction=nonstopmode", "-halt-on-error",
                                  "-output-directory=" + tex.parent_path().string(), tex.filename().string()};
    fs::path pdf = tex;
    pdf.replace_extension(".pdf");
    // Two passes so longtable column widths settle.
    for (int pass = 0; pass < 2; ++pass) {
        ProcessResult r = run_process(argv, opts);
        if (r.timed_out || r.exit_code != 0) {
            std::string log = r.stdout_text + r.stderr_text;
            if (log.size() > 4000) log = log.substr(log.size() - 4000);
            fail(ErrorCode::generation, "LaTeX compilation of " + tex.string() + " failed:\n" + log);
        }
    }
    std::error_code ec;
    if (!fs::is_regular_file(pdf, ec) || fs::file_size(pdf, ec) == 0)
        fail(ErrorCode::generation, "LaTeX toolchain produced no PDF for " + tex.string());
    return pdf;
}

}  // namespace ftk
