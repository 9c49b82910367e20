#include "ftklipse/cli.hpp"

#include <csignal>
#include <functional>
#include <optional>

#include <CLI11.hpp>

#include "ftklipse/json_io.hpp"
#include "ftklipse/rendering.hpp"
#include "ftklipse/reporting.hpp"
#include "ftklipse/service.hpp"
#include "ftklipse/workbench.hpp"

namespace ftk {

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::validation:
        case ErrorCode::not_found:
        case ErrorCode::usage:
        case ErrorCode::monotonicity:
        case ErrorCode::decode:
        case ErrorCode::platform:
        case ErrorCode::manifest:
        case ErrorCode::unsupported_format:
            return kExitValidation;
        case ErrorCode::integrity:
        case ErrorCode::corruption:
            return kExitIntegrity;
        default:
            return kExitIo;
    }
}

namespace {

struct Globals {
    std::string data_root = "./data";
    std::string tools_dir = "./tools.d";
    std::string principal;
    std::string log_file;
    std::string latex_bin = "pdflatex";
    bool json_out = false;
};

Excerpt parse_excerpt(const std::string& spec) {
    // evidence_id:offset:length[:caption]
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        auto colon = spec.find(':', start);
        if (colon == std::string::npos) {
            parts.push_back(spec.substr(start));
            start = std::string::npos;
            break;
        }
        parts.push_back(spec.substr(start, colon - start));
        start = colon + 1;
    }
    if (start != std::string::npos) parts.push_back(spec.substr(start));
    if (parts.size() < 3) fail(ErrorCode::validation, "excerpt must be evidence_id:offset:length[:caption]");
    try {
        return Excerpt{std::stoull(parts[0]), std::stoull(parts[1]), std::stoull(parts[2]),
                       parts.size() > 3 ? parts[3] : ""};
    } catch (const std::exception&) {
        fail(ErrorCode::validation, "excerpt must be evidence_id:offset:length[:caption]");
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ftklipse - forensic case workbench", "ftklipse"};
    app.fallthrough();
    app.require_subcommand(1);

    Globals g;
    app.add_option("--data-root", g.data_root, "Data directory")->capture_default_str();
    app.add_option("--tools-dir", g.tools_dir, "Tool manifest directory")->capture_default_str();
    app.add_option("--principal", g.principal, "Principal recorded in custody events");
    app.add_option("--log-file", g.log_file, "Application log (default <data-root>/ftklipse.application.log)");
    app.add_option("--latex-bin", g.latex_bin, "LaTeX toolchain binary for PDF reports")->capture_default_str();
    app.add_flag("--json", g.json_out, "Machine-readable output");

    std::function<int()> action;
    std::optional<Workbench> bench_storage;
    auto bench = [&]() -> Workbench& {
        if (!bench_storage) {
            WorkbenchConfig cfg;
            cfg.data_root = g.data_root;
            cfg.tools_dir = g.tools_dir;
            cfg.principal = g.principal;
            cfg.log_file = g.log_file;
            cfg.latex_bin = g.latex_bin;
            bench_storage.emplace(cfg);
        }
        return *bench_storage;
    };
    auto who = [&]() -> std::string { return bench().config().principal; };
    auto emit = [&](const json& j, const std::string& human) {
        if (g.json_out)
            out << dump_json(j, 2) << "\n";
        else
            out << human;
    };

    // --- case ---------------------------------------------------------------
    auto* case_cmd = app.add_subcommand("case", "Case management")->require_subcommand(1);
    std::string title, investigator;
    std::uint64_t case_id = 0;
    auto* case_create = case_cmd->add_subcommand("create", "Create a case");
    case_create->add_option("--title", title)->required();
    case_create->add_option("--investigator", investigator);
    case_create->callback([&] {
        action = [&] {
            Case c = bench().casework().create_case(title, investigator.empty() ? who() : investigator);
            bench().note("case " + std::to_string(c.id) + " created by " + who());
            emit(to_json(c), "created case " + std::to_string(c.id) + "\n");
            return kExitOk;
        };
    });
    case_cmd->add_subcommand("list", "List cases")->callback([&] {
        action = [&] {
            json arr = json::array();
            std::string human;
            for (const auto& c : bench().casework().list_cases()) {
                arr.push_back(to_json(c));
                human += std::to_string(c.id) + "\t" + c.title + "\t" + c.investigator + "\t" +
                         std::to_string(c.evidences.size()) + " evidence(s)\n";
            }
            emit(arr, human);
            return kExitOk;
        };
    });
    auto* case_show = case_cmd->add_subcommand("show", "Show a case");
    case_show->add_option("--id", case_id)->required();
    case_show->callback([&] {
        action = [&] {
            Case c = bench().casework().get_case(case_id);
            std::string human = "case " + std::to_string(c.id) + ": " + c.title + " (" + c.investigator + ", opened " +
                                format_iso8601(c.created_at) + ")\n";
            for (const auto& e : c.evidences)
                human += "  evidence " + std::to_string(e.id) + "\t" + e.original_name + "\t" +
                         std::to_string(e.size_bytes) + " bytes\t" + e.reference_hash + "\n";
            emit(to_json(c), human);
            return kExitOk;
        };
    });
    auto* case_custody = case_cmd->add_subcommand("custody", "Chain of custody of every evidence in a case");
    case_custody->add_option("--id", case_id)->required();
    case_custody->callback([&] {
        action = [&] {
            Case c = bench().casework().get_case(case_id);
            json arr = json::array();
            std::string human;
            for (const auto& e : c.evidences) {
                json events = json::array();
                human += "evidence " + std::to_string(e.id) + " (" + e.original_name + ")\n";
                for (const auto& ev : list_custody(e)) {
                    events.push_back(to_json(ev));
                    human += "  " + std::to_string(ev.seq) + "\t" + format_iso8601(ev.timestamp) + "\t" + ev.principal +
                             "\t" + std::string(to_string(ev.operation)) + "\t" + ev.detail + "\n";
                }
                arr.push_back({{"evidence_id", e.id}, {"custody", events}});
            }
            emit(arr, human);
            return kExitOk;
        };
    });

    // --- evidence -----------------------------------------------------------
    auto* ev_cmd = app.add_subcommand("evidence", "Evidence operations")->require_subcommand(1);
    std::uint64_t evidence_id = 0, offset = 0, length = 0;
    std::string path, name, format = "hex", encoding;
    std::optional<std::uint64_t> opt_length;

    auto* ev_import = ev_cmd->add_subcommand("import", "Import a file into a case");
    ev_import->add_option("--case", case_id)->required();
    ev_import->add_option("--path", path)->required();
    ev_import->add_option("--name", name, "Original name (default: file name)");
    ev_import->callback([&] {
        action = [&] {
            std::optional<std::string> n;
            if (!name.empty()) n = name;
            Evidence e = bench().casework().import_evidence(case_id, path, who(), n);
            bench().note("evidence " + std::to_string(e.id) + " imported into case " + std::to_string(case_id) +
                         " from " + path);
            emit(to_json(e), "imported evidence " + std::to_string(e.id) + " " + e.reference_hash + "\n");
            return kExitOk;
        };
    });

    auto* ev_show = ev_cmd->add_subcommand("show", "Show evidence metadata");
    ev_show->add_option("--id", evidence_id)->required();
    ev_show->callback([&] {
        action = [&] {
            Evidence e = bench().casework().get_evidence(evidence_id);
            std::string human = "evidence " + std::to_string(e.id) + " (case " + std::to_string(e.case_id) + ")\n" +
                                "  name:   " + e.original_name + "\n  path:   " + e.managed_path +
                                "\n  size:   " + std::to_string(e.size_bytes) + "\n  " + e.hash_algorithm + ": " +
                                e.reference_hash + "\n";
            if (e.parent_evidence_id) human += "  parent: " + std::to_string(*e.parent_evidence_id) + "\n";
            emit(to_json(e), human);
            return kExitOk;
        };
    });

    auto* ev_verify = ev_cmd->add_subcommand("verify", "Re-hash and compare to the reference digest");
    ev_verify->add_option("--id", evidence_id)->required();
    ev_verify->callback([&] {
        action = [&] {
            VerificationResult v = bench().casework().verify_evidence(evidence_id, who());
            bench().note("evidence " + std::to_string(evidence_id) + " verified by " + who() + ": " +
                         (v.ok ? "ok" : "MISMATCH"));
            emit(to_json(v), v.ok ? "ok " + v.actual_hash + "\n"
                                  : "MISMATCH expected=" + v.expected_hash + " actual=" + v.actual_hash + "\n");
            return v.ok ? kExitOk : kExitIntegrity;
        };
    });

    auto* ev_extract = ev_cmd->add_subcommand("extract", "Extract a byte range as new evidence");
    ev_extract->add_option("--id", evidence_id)->required();
    ev_extract->add_option("--offset", offset)->required();
    ev_extract->add_option("--length", length)->required();
    ev_extract->add_option("--name", name)->required();
    ev_extract->callback([&] {
        action = [&] {
            Evidence c = bench().casework().extract_region(evidence_id, offset, length, name, who());
            bench().note("evidence " + std::to_string(c.id) + " extracted from " + std::to_string(evidence_id));
            emit(to_json(c), "extracted evidence " + std::to_string(c.id) + " " + c.reference_hash + "\n");
            return kExitOk;
        };
    });

    auto* ev_dup = ev_cmd->add_subcommand("duplicate", "Copy evidence under a new name");
    ev_dup->add_option("--id", evidence_id)->required();
    ev_dup->add_option("--name", name)->required();
    ev_dup->callback([&] {
        action = [&] {
            Evidence c = bench().casework().duplicate_evidence(evidence_id, name, who());
            bench().note("evidence " + std::to_string(c.id) + " duplicated from " + std::to_string(evidence_id));
            emit(to_json(c), "duplicated evidence " + std::to_string(c.id) + " " + c.reference_hash + "\n");
            return kExitOk;
        };
    });

    auto* ev_render = ev_cmd->add_subcommand("render", "Render a byte window as hex, ascii or unicode");
    ev_render->add_option("--id", evidence_id)->required();
    ev_render->add_option("--format", format)->check(CLI::IsMember({"hex", "ascii", "unicode"}));
    ev_render->add_option("--offset", offset);
    ev_render->add_option("--length", opt_length);
    ev_render->add_option("--encoding", encoding);
    ev_render->callback([&] {
        action = [&] {
            Evidence e = bench().casework().get_evidence(evidence_id);
            RenderRequest rr;
            rr.format = *parse_render_format(format);
            rr.offset = offset;
            std::uint64_t available = offset <= e.size_bytes ? e.size_bytes - offset : 0;
            rr.length = opt_length.value_or(std::min<std::uint64_t>(available, 4096));
            if (!encoding.empty()) rr.encoding = encoding;
            std::string text = render_evidence(e, bench().casework().data_root(), rr);
            bench().casework().record_event(evidence_id, who(), CustodyOperation::viewed,
                                            "format=" + format + " offset=" + std::to_string(rr.offset) +
                                                " length=" + std::to_string(rr.length));
            bench().note("evidence " + std::to_string(evidence_id) + " viewed as " + format + " by " + who());
            emit({{"evidence_id", evidence_id}, {"format", format}, {"offset", rr.offset}, {"length", rr.length},
                  {"text", text}},
                 text);
            return kExitOk;
        };
    });

    auto* ev_custody = ev_cmd->add_subcommand("custody", "Chain of custody of one evidence");
    ev_custody->add_option("--id", evidence_id)->required();
    ev_custody->callback([&] {
        action = [&] {
            Evidence e = bench().casework().get_evidence(evidence_id);
            json arr = json::array();
            std::string human;
            for (const auto& ev : list_custody(e)) {
                arr.push_back(to_json(ev));
                human += std::to_string(ev.seq) + "\t" + format_iso8601(ev.timestamp) + "\t" + ev.principal + "\t" +
                         std::string(to_string(ev.operation)) + "\t" + ev.detail + "\n";
            }
            emit(arr, human);
            return kExitOk;
        };
    });

    // --- note ---------------------------------------------------------------
    auto* note_cmd = app.add_subcommand("note", "Investigative notes")->require_subcommand(1);
    std::string text;
    std::optional<std::uint64_t> note_offset, note_length;
    auto* note_add = note_cmd->add_subcommand("add", "Attach a note to evidence");
    note_add->add_option("--evidence", evidence_id)->required();
    note_add->add_option("--text", text)->required();
    auto* off_opt = note_add->add_option("--offset", note_offset);
    auto* len_opt = note_add->add_option("--length", note_length);
    off_opt->needs(len_opt);
    len_opt->needs(off_opt);
    note_add->callback([&] {
        action = [&] {
            std::optional<Region> region;
            if (note_offset) region = Region{*note_offset, *note_length};
            Note n = bench().casework().add_note(evidence_id, who(), text, region);
            bench().note("note " + std::to_string(n.id) + " added to evidence " + std::to_string(evidence_id));
            emit(to_json(n), "added note " + std::to_string(n.id) + "\n");
            return kExitOk;
        };
    });
    auto* note_list = note_cmd->add_subcommand("list", "List notes of evidence");
    note_list->add_option("--evidence", evidence_id)->required();
    note_list->callback([&] {
        action = [&] {
            json arr = json::array();
            std::string human;
            for (const auto& n : bench().casework().get_evidence(evidence_id).notes) {
                arr.push_back(to_json(n));
                human += std::to_string(n.id) + "\t" + n.author + "\t" + format_iso8601(n.created_at);
                if (n.region)
                    human += "\t[" + std::to_string(n.region->offset) + "+" + std::to_string(n.region->length) + "]";
                human += "\t" + n.text + "\n";
            }
            emit(arr, human);
            return kExitOk;
        };
    });

    // --- tool ---------------------------------------------------------------
    auto* tool_cmd = app.add_subcommand("tool", "External tools")->require_subcommand(1);
    std::string type_filter, platform_filter, tool_id;
    std::optional<bool> batch_filter, right_click_filter;
    std::vector<std::string> param_args;
    std::optional<int> timeout_s;
    auto* tool_list = tool_cmd->add_subcommand("list", "List registered tools");
    tool_list->add_option("--type", type_filter)->check(CLI::IsMember({"collection", "analysis", "other"}));
    tool_list->add_option("--platform", platform_filter)->check(CLI::IsMember({"win", "unix"}));
    tool_list->add_option("--batch", batch_filter, "Filter on in_batch_menu (true/false)");
    tool_list->add_option("--right-click", right_click_filter, "Filter on in_right_click_menu (true/false)");
    tool_list->callback([&] {
        action = [&] {
            ToolFilter f;
            if (!type_filter.empty()) f.tool_type = parse_tool_type(type_filter);
            if (!platform_filter.empty()) f.platform = parse_platform(platform_filter);
            f.in_batch_menu = batch_filter;
            f.in_right_click_menu = right_click_filter;
            json arr = json::array();
            std::string human;
            for (const auto& m : bench().registry().list(f)) {
                arr.push_back(to_json(m));
                human += m.id + "\t" + m.friendly_name + "\t" + std::string(to_string(m.tool_type)) + "\t" +
                         std::string(to_string(m.platform)) + "\t" + m.command_template + "\n";
            }
            emit(arr, human);
            return kExitOk;
        };
    });
    auto* tool_run = tool_cmd->add_subcommand("run", "Run a tool against evidence");
    tool_run->add_option("--tool", tool_id)->required();
    tool_run->add_option("--evidence", evidence_id)->required();
    tool_run->add_option("--param", param_args, "key=value (repeatable)");
    tool_run->add_option("--timeout", timeout_s, "Seconds (default 300)");
    tool_run->callback([&] {
        action = [&] {
            const ToolManifest* m = bench().registry().lookup(tool_id);
            if (!m) fail(ErrorCode::not_found, "no tool '" + tool_id + "'");
            std::map<std::string, std::string> params;
            for (const auto& p : param_args) {
                auto eq = p.find('=');
                if (eq == std::string::npos) fail(ErrorCode::validation, "--param expects key=value, got '" + p + "'");
                params[p.substr(0, eq)] = p.substr(eq + 1);
            }
            Evidence e = bench().casework().get_evidence(evidence_id);
            InvocationPlan plan = plan_invocation(*m, e, params, bench().casework().case_dir(e.case_id));
            if (timeout_s) plan.timeout_s = *timeout_s;
            try {
                ToolRunResult r = run_tool(bench().casework(), plan, who());
                bench().note("tool " + tool_id + " run on evidence " + std::to_string(evidence_id) + ": exit " +
                             std::to_string(r.exit_code));
                std::string human = r.stdout_text;
                if (!human.empty() && human.back() != '\n') human += '\n';
                human += "exit=" + std::to_string(r.exit_code) +
                         " post-verification=" + (r.post_verification.ok ? "ok" : "MISMATCH");
                if (r.output_evidence_id) human += " output-evidence=" + std::to_string(*r.output_evidence_id);
                human += "\n";
                emit(to_json(r), human);
                if (!r.stderr_text.empty() && !g.json_out) err << r.stderr_text;
                return r.post_verification.ok ? kExitOk : kExitIntegrity;
            } catch (const ToolRunError& e) {
                bench().note("tool " + tool_id + " run on evidence " + std::to_string(evidence_id) + " failed: " + e.what());
                throw;
            }
        };
    });

    // --- report -------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Reports")->require_subcommand(1);
    std::string report_format = "html", report_title, summary, intro, conclusion;
    std::vector<std::uint64_t> include_ids;
    std::vector<std::string> excerpt_args;
    bool no_notes = false, no_custody = false;
    auto* report_gen = report_cmd->add_subcommand("generate", "Generate a LaTeX, HTML or PDF report");
    report_gen->add_option("--case", case_id)->required();
    report_gen->add_option("--format", report_format)->check(CLI::IsMember({"latex", "html", "pdf"}));
    report_gen->add_option("--title", report_title);
    report_gen->add_option("--summary", summary, "Executive summary");
    report_gen->add_option("--intro", intro, "Introduction");
    report_gen->add_option("--conclusion", conclusion);
    report_gen->add_option("--evidence", include_ids, "Evidence ids to include (default: all)");
    report_gen->add_option("--excerpt", excerpt_args, "evidence_id:offset:length[:caption] (repeatable)");
    report_gen->add_flag("--no-notes", no_notes);
    report_gen->add_flag("--no-custody", no_custody);
    report_gen->callback([&] {
        action = [&] {
            Casework& cw = bench().casework();
            Case c = cw.get_case(case_id);
            FrontMatter fm = c.front_matter;
            bool changed = false;
            if (!summary.empty()) fm.executive_summary = summary, changed = true;
            if (!intro.empty()) fm.introduction = intro, changed = true;
            if (!conclusion.empty()) fm.conclusion = conclusion, changed = true;
            if (changed) cw.set_front_matter(case_id, fm);

            ReportSelection sel;
            sel.title = report_title;
            sel.include_evidence_ids = include_ids;
            for (const auto& x : excerpt_args) sel.excerpts.push_back(parse_excerpt(x));
            sel.include_notes = !no_notes;
            sel.include_custody = !no_custody;
            ReportSpec spec = build_report_spec(cw, case_id, sel, fm, who());
            std::filesystem::path written = report_format == "pdf" ? render_pdf(cw, spec, bench().config().latex_bin)
                                                                   : write_report(cw, spec, report_format);
            bench().note("report " + written.filename().string() + " generated for case " + std::to_string(case_id));
            emit({{"path", written.string()}, {"format", report_format}}, written.string() + "\n");
            return kExitOk;
        };
    });

    // --- serve --------------------------------------------------------------
    auto* serve_cmd = app.add_subcommand("serve", "Run the local HTTP service");
    std::string bind = "127.0.0.1:7806", ui_dir;
    serve_cmd->add_option("--bind", bind)->capture_default_str();
    serve_cmd->add_option("--ui-dir", ui_dir, "Static web UI directory served at /ui/");
    serve_cmd->callback([&] {
        action = [&] {
            sigset_t set;
            sigemptyset(&set);
            sigaddset(&set, SIGINT);
            sigaddset(&set, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);

            ServiceConfig sc;
            sc.bind_address = bind;
            sc.workbench.data_root = g.data_root;
            sc.workbench.tools_dir = g.tools_dir;
            sc.workbench.principal = g.principal;
            sc.workbench.log_file = g.log_file;
            sc.workbench.latex_bin = g.latex_bin;
            sc.workbench.echo_log = true;
            if (!ui_dir.empty()) sc.ui_dir = ui_dir;
            Service service(sc);
            service.start();
            out << "listening on http://" << service.host() << ":" << service.port() << "\n" << std::flush;
            int sig = 0;
            sigwait(&set, &sig);
            service.stop();
            return kExitOk;
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    if (!action) {
        err << app.help();
        return kExitValidation;
    }
    try {
        return action();
    } catch (const Error& e) {
        if (g.json_out)
            out << dump_json(error_json(e.code(), e.what()), 2) << "\n";
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace ftk
