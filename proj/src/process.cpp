#include "scr/process.hpp"

#include "scr/error.hpp"

#include <array>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace scr::process {

namespace {

std::atomic<std::uint64_t> g_launches{0};

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

}  // namespace

std::uint64_t launch_count() { return g_launches.load(); }

Runner& default_runner() {
    static SubprocessRunner runner;
    return runner;
}

Result SubprocessRunner::run(const Command& cmd) {
    if (cmd.argv.empty()) throw Error(ErrorCode::ProcessError, "empty argv");

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::ProcessError, std::strerror(errno));
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw Error(ErrorCode::ProcessError, std::strerror(errno));
    }

    std::vector<std::string> env_strings;
    for (const auto& [k, v] : cmd.env) env_strings.push_back(k + "=" + v);

    std::vector<char*> argv;
    for (const auto& a : cmd.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    g_launches.fetch_add(1);
    pid_t pid = ::fork();
    if (pid < 0) {
        int e = errno;
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        throw Error(ErrorCode::ProcessError, std::string("fork: ") + std::strerror(e));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        if (!cmd.cwd.empty() && ::chdir(cmd.cwd.c_str()) != 0) _exit(126);
        for (auto& s : env_strings) ::putenv(s.data());
        ::execvp(argv[0], argv.data());
        _exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    int out_fd = out_pipe[0];
    int err_fd = err_pipe[0];

    Result result;
    const auto deadline = std::chrono::steady_clock::now() + cmd.timeout;
    std::array<char, 65536> buf{};

    while (out_fd >= 0 || err_fd >= 0) {
        std::array<pollfd, 2> fds{};
        nfds_t n = 0;
        if (out_fd >= 0) fds[n++] = {out_fd, POLLIN, 0};
        if (err_fd >= 0) fds[n++] = {err_fd, POLLIN, 0};

        int wait_ms = -1;
        if (cmd.timeout.count() > 0) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                result.timed_out = true;
                break;
            }
            wait_ms = static_cast<int>(left.count());
        }
        int rc = ::poll(fds.data(), n, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) continue;
        for (nfds_t i = 0; i < n; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            ssize_t got = ::read(fds[i].fd, buf.data(), buf.size());
            if (got > 0) {
                (fds[i].fd == out_fd ? result.out : result.err).append(buf.data(), static_cast<size_t>(got));
            } else if (got == 0 || errno != EINTR) {
                if (fds[i].fd == out_fd) close_fd(out_fd);
                else close_fd(err_fd);
            }
        }
    }

    if (result.timed_out) ::kill(-pid, SIGKILL);
    close_fd(out_fd);
    close_fd(err_fd);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
    return result;
}

}  // namespace scr::process
