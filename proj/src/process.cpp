#include "ftklipse/process.hpp"

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ftklipse/error.hpp"

namespace ftk {

namespace fs = std::filesystem;

namespace {

struct Pipe {
    int fds[2] = {-1, -1};

    Pipe() {
        if (::pipe2(fds, O_CLOEXEC) != 0) fail(ErrorCode::launch, std::string("pipe failed: ") + std::strerror(errno));
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;

    int read_end() const { return fds[0]; }
    int write_end() const { return fds[1]; }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

void drain(int fd, std::string& sink, bool& truncated, std::size_t cap, bool& open) {
    std::array<char, 65536> buf{};
    ssize_t n = ::read(fd, buf.data(), buf.size());
    if (n > 0) {
        auto room = cap > sink.size() ? cap - sink.size() : 0;
        auto take = std::min<std::size_t>(room, static_cast<std::size_t>(n));
        sink.append(buf.data(), take);
        if (take < static_cast<std::size_t>(n)) truncated = true;
    } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        open = false;
    }
}

}  // namespace

fs::path find_executable(const std::string& name) {
    if (name.empty()) return {};
    if (name.find('/') != std::string::npos) return ::access(name.c_str(), X_OK) == 0 ? fs::path(name) : fs::path();
    const char* path_env = std::getenv("PATH");
    std::string paths = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
    std::size_t start = 0;
    while (start <= paths.size()) {
        auto end = paths.find(':', start);
        if (end == std::string::npos) end = paths.size();
        std::string dir = paths.substr(start, end - start);
        if (dir.empty()) dir = ".";
        fs::path candidate = fs::path(dir) / name;
        std::error_code ec;
        if (fs::is_regular_file(candidate, ec) && ::access(candidate.c_str(), X_OK) == 0) return candidate;
        start = end + 1;
    }
    return {};
}

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
    if (argv.empty() || argv[0].empty()) fail(ErrorCode::launch, "empty command");

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    std::string workdir = options.working_dir.string();

    Pipe out, err, status;
    pid_t pid = ::fork();
    if (pid < 0) fail(ErrorCode::launch, std::string("fork failed: ") + std::strerror(errno));

    if (pid == 0) {
        // Child: async-signal-safe calls only.
        ::setpgid(0, 0);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::dup2(out.write_end(), STDOUT_FILENO);
        ::dup2(err.write_end(), STDERR_FILENO);
        if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) {
            int e = errno;
            (void)!::write(status.write_end(), &e, sizeof e);
            ::_exit(127);
        }
        ::execvp(cargv[0], cargv.data());
        int e = errno;
        (void)!::write(status.write_end(), &e, sizeof e);
        ::_exit(127);
    }

    ::setpgid(pid, pid);
    out.close_write();
    err.close_write();
    status.close_write();

    int child_errno = 0;
    ssize_t got;
    do {
        got = ::read(status.read_end(), &child_errno, sizeof child_errno);
    } while (got < 0 && errno == EINTR);
    if (got == static_cast<ssize_t>(sizeof child_errno)) {
        int st = 0;
        ::waitpid(pid, &st, 0);
        fail(ErrorCode::launch, "cannot launch '" + argv[0] + "': " + std::strerror(child_errno));
    }

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    bool out_open = true, err_open = true;
    while (out_open || err_open) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            result.timed_out = true;
            break;
        }
        std::array<pollfd, 2> fds{};
        nfds_t n = 0;
        if (out_open) fds[n++] = {out.read_end(), POLLIN, 0};
        if (err_open) fds[n++] = {err.read_end(), POLLIN, 0};
        int rc = ::poll(fds.data(), n, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (nfds_t i = 0; i < n; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            if (fds[i].fd == out.read_end())
                drain(fds[i].fd, result.stdout_text, result.stdout_truncated, options.output_cap, out_open);
            else
                drain(fds[i].fd, result.stderr_text, result.stderr_truncated, options.output_cap, err_open);
        }
    }

    int st = 0;
    if (!result.timed_out) {
        // Pipes closed; the process may still be running with them closed.
        while (true) {
            pid_t w = ::waitpid(pid, &st, WNOHANG);
            if (w == pid) break;
            if (w < 0 && errno != EINTR) break;
            if (std::chrono::steady_clock::now() >= deadline) {
                result.timed_out = true;
                break;
            }
            ::usleep(2000);
        }
    }
    if (result.timed_out) {
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        while (::waitpid(pid, &st, 0) < 0 && errno == EINTR) {
        }
    }

    if (WIFEXITED(st))
        result.exit_code = WEXITSTATUS(st);
    else if (WIFSIGNALED(st))
        result.exit_code = -WTERMSIG(st);
    return result;
}

}  // namespace ftk
