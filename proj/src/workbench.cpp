#include "ftklipse/workbench.hpp"

#include <cstdlib>

namespace ftk {

std::string default_principal() {
    const char* user = std::getenv("USER");
    return (user && *user) ? user : "investigator";
}

Workbench::Workbench(WorkbenchConfig config) : config_(std::move(config)) {
    if (config_.principal.empty()) config_.principal = default_principal();
    store_ = Store::open(config_.data_root, config_.adapter);
    std::error_code ec;
    std::filesystem::create_directories(config_.data_root, ec);
    if (config_.log_file.empty()) config_.log_file = config_.data_root / "ftklipse.application.log";
    log_ = LogSink::open(config_.log_file, config_.echo_log);
    casework_ = std::make_unique<Casework>(store_);

    ScanResult scan = scan_tool_dir(config_.tools_dir);
    for (auto& m : scan.tools) registry_.register_tool(std::move(m));
    for (const auto& d : scan.diagnostics) note("tool scan: " + d);
}

void Workbench::note(const std::string& message) { log_->log(message); }

}  // namespace ftk
