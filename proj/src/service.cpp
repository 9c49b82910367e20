#include "ftklipse/service.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "ftklipse/json_io.hpp"
#include "ftklipse/rendering.hpp"
#include "ftklipse/reporting.hpp"

namespace ftk {

namespace fs = std::filesystem;

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::validation:
        case ErrorCode::usage:
        case ErrorCode::monotonicity:
        case ErrorCode::decode:
        case ErrorCode::platform:
        case ErrorCode::manifest:
        case ErrorCode::unsupported_format:
            return 400;
        case ErrorCode::not_found:
            return 404;
        case ErrorCode::integrity:
        case ErrorCode::corruption:
        case ErrorCode::missing_evidence:
            return 409;
        default:
            return 500;
    }
}

namespace {

struct RunState {
    std::string status = "running";  // running | succeeded | failed
    std::string tool_id;
    std::uint64_t evidence_id = 0;
    json result;
    json error;
};

std::uint64_t parse_id(const std::string& s) {
    try {
        std::size_t pos = 0;
        auto v = std::stoull(s, &pos);
        if (pos == s.size()) return v;
    } catch (...) {
    }
    fail(ErrorCode::validation, "invalid id '" + s + "'");
}

std::uint64_t query_u64(const httplib::Request& req, const char* name, std::uint64_t fallback) {
    if (!req.has_param(name)) return fallback;
    return parse_id(req.get_param_value(name));
}

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::validation, "request body must be a JSON object");
    return j;
}

std::optional<bool> query_bool(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    auto v = req.get_param_value(name);
    if (v == "true") return true;
    if (v == "false") return false;
    fail(ErrorCode::validation, std::string("query parameter ") + name + " must be true or false");
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    Workbench bench;
    httplib::Server server;
    std::thread listener;
    std::string host = "127.0.0.1";
    int port = 0;

    std::mutex runs_mu;
    std::map<std::uint64_t, RunState> runs;
    std::vector<std::thread> run_threads;
    std::uint64_t next_run_id = 1;

    explicit Impl(ServiceConfig cfg) : config(std::move(cfg)), bench(config.workbench) {
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
        });
        // Decode every stored case once so a damaged store stops startup
        // instead of surfacing on some later request.
        bench.casework().list_cases();
        routes();
    }

    std::string principal(const httplib::Request& req) const {
        auto p = req.get_header_value("X-Principal");
        return p.empty() ? bench.config().principal : p;
    }

    static void send_json(httplib::Response& res, const json& body, int status = 200) {
        res.status = status;
        res.set_content(dump_json(body), "application/json");
    }

    static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
        send_json(res, error_json(code, message), http_status_for(code));
    }

    template <typename F>
    auto guarded(F&& body) {
        return [this, body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
            try {
                body(req, res);
            } catch (const ToolRunError& e) {
                json j = error_json(e.code(), e.what());
                j["result"] = to_json(e.result());
                send_json(res, j, http_status_for(e.code()));
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, ErrorCode::validation, std::string("bad request body: ") + e.what());
            } catch (const std::exception& e) {
                send_error(res, ErrorCode::internal, e.what());
            }
        };
    }

    Casework& cw() { return bench.casework(); }

    void routes();
    void upload(const httplib::Request& req, httplib::Response& res, const httplib::ContentReader& reader);
    void run_tool_route(const httplib::Request& req, httplib::Response& res);
    void report(const httplib::Request& req, httplib::Response& res);
};

void Service::Impl::routes() {
    server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
                   send_json(res, {{"status", "ok"}});
               }));

    server.Get("/cases", guarded([this](const httplib::Request&, httplib::Response& res) {
                   json out = json::array();
                   for (const auto& c : cw().list_cases()) out.push_back(to_json(c));
                   send_json(res, out);
               }));

    server.Post("/cases", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    json body = parse_body(req.body);
                    std::string investigator = body.value("investigator", principal(req));
                    Case c = cw().create_case(body.value("title", ""), investigator);
                    bench.note("case " + std::to_string(c.id) + " created by " + principal(req));
                    send_json(res, to_json(c), 201);
                }));

    server.Get(R"(/cases/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(cw().get_case(parse_id(req.matches[1]))));
               }));

    server.Post(R"(/cases/(\d+)/evidence)",
                [this](const httplib::Request& req, httplib::Response& res, const httplib::ContentReader& reader) {
                    guarded([&](const httplib::Request& r, httplib::Response& s) { upload(r, s, reader); })(req, res);
                });

    server.Get(R"(/cases/(\d+)/custody)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   Case c = cw().get_case(parse_id(req.matches[1]));
                   json out = json::array();
                   for (const auto& e : c.evidences) {
                       json events = json::array();
                       for (const auto& ev : list_custody(e)) events.push_back(to_json(ev));
                       out.push_back({{"evidence_id", e.id}, {"custody", events}});
                   }
                   send_json(res, out);
               }));

    server.Get(R"(/evidence/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(cw().get_evidence(parse_id(req.matches[1]))));
               }));

    server.Get(R"(/evidence/(\d+)/render)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto id = parse_id(req.matches[1]);
                   Evidence e = cw().get_evidence(id);
                   RenderRequest rr;
                   std::string fmt = req.has_param("format") ? req.get_param_value("format") : "hex";
                   auto f = parse_render_format(fmt);
                   if (!f) fail(ErrorCode::validation, "unknown render format '" + fmt + "' (hex, ascii, unicode)");
                   rr.format = *f;
                   rr.offset = query_u64(req, "offset", 0);
                   std::uint64_t available = rr.offset <= e.size_bytes ? e.size_bytes - rr.offset : 0;
                   rr.length = query_u64(req, "length", std::min<std::uint64_t>(available, 4096));
                   if (req.has_param("encoding")) rr.encoding = req.get_param_value("encoding");
                   std::string text = render_evidence(e, cw().data_root(), rr);
                   std::string detail = "format=" + std::string(to_string(rr.format)) + " offset=" +
                                        std::to_string(rr.offset) + " length=" + std::to_string(rr.length);
                   cw().record_event(id, principal(req), CustodyOperation::viewed, detail);
                   bench.note("evidence " + std::to_string(id) + " viewed as " + fmt + " by " + principal(req));
                   res.set_content(text, "text/plain; charset=utf-8");
               }));

    server.Post(R"(/evidence/(\d+)/verify)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    auto id = parse_id(req.matches[1]);
                    VerificationResult v = cw().verify_evidence(id, principal(req));
                    bench.note("evidence " + std::to_string(id) + " verified by " + principal(req) + ": " +
                               (v.ok ? "ok" : "MISMATCH"));
                    send_json(res, to_json(v));
                }));

    server.Post(R"(/evidence/(\d+)/extract)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    auto id = parse_id(req.matches[1]);
                    json body = parse_body(req.body);
                    Evidence child = cw().extract_region(id, body.at("offset").get<std::uint64_t>(),
                                                         body.at("length").get<std::uint64_t>(),
                                                         body.at("name").get<std::string>(), principal(req));
                    bench.note("evidence " + std::to_string(child.id) + " extracted from " + std::to_string(id));
                    send_json(res, to_json(child), 201);
                }));

    server.Post(R"(/evidence/(\d+)/duplicate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    auto id = parse_id(req.matches[1]);
                    json body = parse_body(req.body);
                    Evidence child = cw().duplicate_evidence(id, body.at("name").get<std::string>(), principal(req));
                    bench.note("evidence " + std::to_string(child.id) + " duplicated from " + std::to_string(id));
                    send_json(res, to_json(child), 201);
                }));

    server.Get(R"(/evidence/(\d+)/notes)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   json out = json::array();
                   for (const auto& n : cw().get_evidence(parse_id(req.matches[1])).notes) out.push_back(to_json(n));
                   send_json(res, out);
               }));

    server.Post(R"(/evidence/(\d+)/notes)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    auto id = parse_id(req.matches[1]);
                    json body = parse_body(req.body);
                    std::optional<Region> region;
                    if (body.contains("region") && !body["region"].is_null())
                        region = Region{body["region"].at("offset").get<std::uint64_t>(),
                                        body["region"].at("length").get<std::uint64_t>()};
                    Note n = cw().add_note(id, principal(req), body.value("text", ""), region);
                    bench.note("note " + std::to_string(n.id) + " added to evidence " + std::to_string(id));
                    send_json(res, to_json(n), 201);
                }));

    server.Get("/tools", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   ToolFilter f;
                   if (req.has_param("type")) {
                       f.tool_type = parse_tool_type(req.get_param_value("type"));
                       if (!f.tool_type) fail(ErrorCode::validation, "unknown tool type");
                   }
                   if (req.has_param("platform")) {
                       f.platform = parse_platform(req.get_param_value("platform"));
                       if (!f.platform) fail(ErrorCode::validation, "unknown platform");
                   }
                   f.in_batch_menu = query_bool(req, "in_batch_menu");
                   f.in_right_click_menu = query_bool(req, "in_right_click_menu");
                   json out = json::array();
                   for (const auto& m : bench.registry().list(f)) out.push_back(to_json(m));
                   send_json(res, out);
               }));

    server.Post(R"(/tools/([^/]+)/run)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    run_tool_route(req, res);
                }));

    server.Get(R"(/runs/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto id = parse_id(req.matches[1]);
                   std::lock_guard lock(runs_mu);
                   auto it = runs.find(id);
                   if (it == runs.end()) fail(ErrorCode::not_found, "no run " + std::to_string(id));
                   const RunState& r = it->second;
                   json out = {{"run_id", id}, {"status", r.status}, {"tool_id", r.tool_id}, {"evidence_id", r.evidence_id}};
                   if (!r.result.is_null()) out["result"] = r.result;
                   if (!r.error.is_null()) out["error"] = r.error;
                   send_json(res, out);
               }));

    server.Post(R"(/cases/(\d+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                    report(req, res);
                }));

    if (config.ui_dir && fs::is_directory(*config.ui_dir)) server.set_mount_point("/ui", config.ui_dir->string());
}

void Service::Impl::upload(const httplib::Request& req, httplib::Response& res, const httplib::ContentReader& reader) {
    auto case_id = parse_id(req.matches[1]);
    cw().get_case(case_id);  // 404 before receiving the body

    if (!req.is_multipart_form_data()) {
        std::string body;
        reader([&](const char* data, std::size_t len) {
            body.append(data, len);
            return true;
        });
        json j = parse_body(body);
        fs::path source = j.at("path").get<std::string>();
        std::optional<std::string> name;
        if (j.contains("name")) name = j["name"].get<std::string>();
        Evidence e = cw().import_evidence(case_id, source, principal(req), name);
        bench.note("evidence " + std::to_string(e.id) + " imported into case " + std::to_string(case_id) + " from " +
                   source.string());
        send_json(res, to_json(e), 201);
        return;
    }

    // Stream the uploaded part to a scratch file, then import it.
    std::random_device rd;
    fs::path scratch = cw().case_dir(case_id) / (".upload-" + std::to_string(rd()) + std::to_string(rd()));
    std::ofstream out;
    std::string filename;
    bool in_file = false, got_file = false;
    reader(
        [&](const httplib::MultipartFormData& part) {
            in_file = part.name == "file" && !got_file;
            if (in_file) {
                filename = part.filename;
                got_file = true;
                out.open(scratch, std::ios::binary | std::ios::trunc);
            }
            return true;
        },
        [&](const char* data, std::size_t len) {
            if (in_file) out.write(data, static_cast<std::streamsize>(len));
            return true;
        });
    out.close();
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove(p, ec);
        }
    } cleanup{scratch};
    if (!got_file) fail(ErrorCode::validation, "multipart upload needs a `file` part");
    if (filename.empty()) filename = "upload.bin";
    Evidence e = cw().import_evidence(case_id, scratch, principal(req), filename, "upload:" + filename);
    bench.note("evidence " + std::to_string(e.id) + " uploaded into case " + std::to_string(case_id) + " as " + filename);
    send_json(res, to_json(e), 201);
}

void Service::Impl::run_tool_route(const httplib::Request& req, httplib::Response& res) {
    std::string tool_id = req.matches[1];
    const ToolManifest* m = bench.registry().lookup(tool_id);
    if (!m) fail(ErrorCode::not_found, "no tool '" + tool_id + "'");
    json body = parse_body(req.body);
    auto evidence_id = body.at("evidence_id").get<std::uint64_t>();
    std::map<std::string, std::string> params;
    if (body.contains("params")) params = body["params"].get<std::map<std::string, std::string>>();
    Evidence e = cw().get_evidence(evidence_id);
    InvocationPlan plan = plan_invocation(*m, e, params, cw().case_dir(e.case_id));
    if (body.contains("timeout_s")) plan.timeout_s = body["timeout_s"].get<int>();
    if (plan.timeout_s < 1) fail(ErrorCode::validation, "timeout_s must be positive");
    const std::string who = principal(req);

    std::uint64_t run_id;
    {
        std::lock_guard lock(runs_mu);
        run_id = next_run_id++;
        runs[run_id] = RunState{"running", tool_id, evidence_id, nullptr, nullptr};
    }

    auto execute = [this, plan, who, run_id] {
        RunState done;
        done.tool_id = plan.tool_id;
        done.evidence_id = plan.evidence_id;
        try {
            ToolRunResult r = run_tool(cw(), plan, who);
            done.status = "succeeded";
            done.result = to_json(r);
        } catch (const ToolRunError& e) {
            done.status = "failed";
            done.result = to_json(e.result());
            done.error = error_json(e.code(), e.what())["error"];
        } catch (const Error& e) {
            done.status = "failed";
            done.error = error_json(e.code(), e.what())["error"];
        } catch (const std::exception& e) {
            done.status = "failed";
            done.error = error_json(ErrorCode::internal, e.what())["error"];
        }
        try {
            bench.note("tool " + plan.tool_id + " run " + std::to_string(run_id) + " on evidence " +
                       std::to_string(plan.evidence_id) + ": " + done.status);
        } catch (...) {
        }
        std::lock_guard lock(runs_mu);
        runs[run_id] = std::move(done);
    };

    if (body.value("wait", false)) {
        execute();
        std::lock_guard lock(runs_mu);
        const RunState& r = runs[run_id];
        json out = {{"run_id", run_id}, {"status", r.status}, {"tool_id", r.tool_id}, {"evidence_id", r.evidence_id},
                    {"plan", to_json(plan)}};
        if (!r.result.is_null()) out["result"] = r.result;
        if (!r.error.is_null()) out["error"] = r.error;
        send_json(res, out);
        return;
    }
    {
        std::lock_guard lock(runs_mu);
        run_threads.emplace_back(execute);
    }
    send_json(res, {{"run_id", run_id}, {"status", "running"}, {"plan", to_json(plan)}}, 202);
}

void Service::Impl::report(const httplib::Request& req, httplib::Response& res) {
    auto case_id = parse_id(req.matches[1]);
    json body = parse_body(req.body);
    std::string format = body.value("format", "html");
    if (format != "pdf") generator_for(format);  // reject unknown formats before recording custody

    Case c = cw().get_case(case_id);
    FrontMatter fm = c.front_matter;
    if (body.contains("front_matter")) {
        fm = front_matter_from_json(body["front_matter"]);
        cw().set_front_matter(case_id, fm);
    }
    ReportSpec spec = build_report_spec(cw(), case_id, selection_from_json(body), fm, principal(req));

    fs::path path;
    std::string type;
    if (format == "pdf") {
        path = render_pdf(cw(), spec, bench.config().latex_bin);
        type = "application/pdf";
    } else {
        path = write_report(cw(), spec, format);
        type = format == "html" ? "text/html; charset=utf-8" : "application/x-latex";
    }
    bench.note("report " + path.filename().string() + " generated for case " + std::to_string(case_id));
    Bytes doc = read_file(path);
    res.set_header("X-Report-Path", path.string());
    res.set_content(std::string(doc.begin(), doc.end()), type);
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

void Service::start() {
    const std::string& addr = impl_->config.bind_address;
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::validation, "bind address must be host:port, got '" + addr + "'");
    impl_->host = addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (...) {
        fail(ErrorCode::validation, "bad port in bind address '" + addr + "'");
    }
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->host);
        if (impl_->port <= 0) fail(ErrorCode::io, "cannot bind " + addr);
    } else {
        if (!impl_->server.bind_to_port(impl_->host, port))
            fail(ErrorCode::io, "cannot bind " + addr + " (port busy or address unavailable)");
        impl_->port = port;
    }
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    impl_->bench.note("service listening on " + impl_->host + ":" + std::to_string(impl_->port));
}

void Service::stop() {
    if (!impl_) return;
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
    std::vector<std::thread> pending;
    {
        std::lock_guard lock(impl_->runs_mu);
        pending.swap(impl_->run_threads);
    }
    for (auto& t : pending)
        if (t.joinable()) t.join();
}

bool Service::running() const { return impl_->server.is_running(); }
const std::string& Service::host() const { return impl_->host; }
int Service::port() const { return impl_->port; }
Workbench& Service::workbench() { return impl_->bench; }

}  // namespace ftk
