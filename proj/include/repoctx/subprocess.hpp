#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "repoctx/common.hpp"

namespace repoctx {

struct ProcessResult {
    int exit_code = -1;  // -1 when killed by a signal or timed out
    bool timed_out = false;
    std::string output;  // stdout and stderr, interleaved
    double elapsed_ms = 0.0;

    bool ok() const noexcept { return !timed_out && exit_code == 0; }
};

namespace detail {

inline void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

inline int wait_child(pid_t pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) return -1;
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace detail

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed. Output beyond `max_output` bytes is discarded.
inline ProcessResult run_shell(const std::string& command, const fs::path& cwd, std::chrono::milliseconds timeout,
                               std::size_t max_output = 1 << 20) {
    int pipefd[2];
    if (::pipe(pipefd) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
    const Stopwatch clock;
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        throw Error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::dup2(pipefd[1], STDERR_FILENO);
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(127);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    int rd = pipefd[0];
    ::close(pipefd[1]);

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    while (rd >= 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            result.timed_out = true;
            break;
        }
        pollfd p{rd, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
        if (ready < 0 && errno != EINTR) break;
        if (ready <= 0) continue;
        const ssize_t n = ::read(rd, buf, sizeof buf);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            detail::close_fd(rd);
            break;
        }
        if (result.output.size() < max_output) {
            result.output.append(buf, static_cast<std::size_t>(std::min<ssize_t>(n, max_output - result.output.size())));
        }
    }
    if (result.timed_out) {
        ::kill(-pid, SIGKILL);
        detail::close_fd(rd);
        detail::wait_child(pid);
        result.exit_code = -1;
    } else {
        detail::close_fd(rd);
        result.exit_code = detail::wait_child(pid);
    }
    result.elapsed_ms = clock.elapsed_ms();
    return result;
}

/// Long-lived child with piped stdin/stdout (stderr inherited). Used for
/// language servers.
class ChildProcess {
public:
    ChildProcess(const std::vector<std::string>& argv, const fs::path& cwd = {}) {
        if (argv.empty()) throw Error("empty command");
        int in[2], out[2];
        if (::pipe(in) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
        if (::pipe(out) != 0) {
            ::close(in[0]);
            ::close(in[1]);
            throw Error(std::string("pipe: ") + std::strerror(errno));
        }
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        pid_ = ::fork();
        if (pid_ < 0) throw Error(std::string("fork: ") + std::strerror(errno));
        if (pid_ == 0) {
            ::setpgid(0, 0);
            ::dup2(in[0], STDIN_FILENO);
            ::dup2(out[1], STDOUT_FILENO);
            ::close(in[0]);
            ::close(in[1]);
            ::close(out[0]);
            ::close(out[1]);
            if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(127);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(in[0]);
        ::close(out[1]);
        to_child_ = in[1];
        from_child_ = out[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() { terminate(); }

    void write_all(std::string_view data) {
        while (!data.empty()) {
            const ssize_t n = ::write(to_child_, data.data(), data.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(std::string("write to child: ") + std::strerror(errno));
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    /// Reads exactly `n` bytes, or throws on EOF or timeout.
    std::string read_exact(std::size_t n, std::chrono::milliseconds timeout) {
        std::string out;
        while (buffer_.size() < n) fill(timeout);
        out = buffer_.substr(0, n);
        buffer_.erase(0, n);
        return out;
    }

    /// Reads up to and including "\r\n" or "\n"; returns the line without it.
    std::string read_line(std::chrono::milliseconds timeout) {
        for (;;) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            fill(timeout);
        }
    }

    bool running() {
        if (pid_ <= 0) return false;
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            pid_ = -1;
            return false;
        }
        return true;
    }

    void close_stdin() { detail::close_fd(to_child_); }

    /// Closes stdin, waits briefly for a clean exit, then kills the group.
    void terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(500)) {
        detail::close_fd(to_child_);
        if (pid_ > 0) {
            const auto until = std::chrono::steady_clock::now() + grace;
            while (running() && std::chrono::steady_clock::now() < until) {
                ::usleep(10000);
            }
            if (pid_ > 0) {
                ::kill(-pid_, SIGKILL);
                ::kill(pid_, SIGKILL);
                detail::wait_child(pid_);
                pid_ = -1;
            }
        }
        detail::close_fd(from_child_);
    }

private:
    void fill(std::chrono::milliseconds timeout) {
        if (from_child_ < 0) throw Error("child output closed");
        pollfd p{from_child_, POLLIN, 0};
        int ready;
        do {
            ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
        } while (ready < 0 && errno == EINTR);
        if (ready == 0) throw Error("timed out waiting for child output");
        if (ready < 0) throw Error(std::string("poll: ") + std::strerror(errno));
        char buf[8192];
        ssize_t n;
        do {
            n = ::read(from_child_, buf, sizeof buf);
        } while (n < 0 && errno == EINTR);
        if (n <= 0) throw Error("child closed its output");
        buffer_.append(buf, static_cast<std::size_t>(n));
    }

    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace repoctx
