#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "ftklipse/audit_log.hpp"
#include "ftklipse/casework.hpp"
#include "ftklipse/datastore.hpp"
#include "ftklipse/toolkit.hpp"

namespace ftk {

struct WorkbenchConfig {
    std::filesystem::path data_root = "data";
    std::filesystem::path tools_dir = "tools.d";
    std::string principal;
    std::filesystem::path log_file;  // empty: <data_root>/ftklipse.application.log
    bool echo_log = false;
    std::string latex_bin = "pdflatex";
    AdapterKind adapter = AdapterKind::file;
};

/// Everything one process needs: the store it owns, the engine over it,
/// the application log and the tool registry scanned at startup.
class Workbench {
public:
    explicit Workbench(WorkbenchConfig config);

    const WorkbenchConfig& config() const { return config_; }
    Casework& casework() { return *casework_; }
    const ToolRegistry& registry() const { return registry_; }
    LogSink& log() { return *log_; }

    void note(const std::string& message);

private:
    WorkbenchConfig config_;
    StoreHandle store_;
    std::unique_ptr<Casework> casework_;
    std::shared_ptr<LogSink> log_;
    ToolRegistry registry_;
};

/// Default principal: $USER, else "investigator".
std::string default_principal();

}  // namespace ftk
