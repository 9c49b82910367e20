#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ftklipse/workbench.hpp"

namespace ftk {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1:7806";  // port 0 picks a free port
    WorkbenchConfig workbench;
    std::optional<std::filesystem::path> ui_dir;   // served at /ui/ when present
};

/// HTTP status for an engine error code (400/404/409/500).
int http_status_for(ErrorCode code) noexcept;

/// Local JSON API over the workbench. Request principal comes from the
/// `X-Principal` header, falling back to the configured principal.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts serving on a background thread. Throws io when the
    /// address cannot be bound.
    void start();
    void stop();
    bool running() const;

    const std::string& host() const;
    int port() const;
    Workbench& workbench();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ftk
