#include "beestar/process.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "beestar/error.hpp"

extern char** environ;

namespace beestar {

namespace {

struct Pipe {
    int read = -1;
    int write = -1;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        throw Error(ErrorCode::SpawnFailure, std::string("pipe: ") + std::strerror(errno));
    }
    return {fds[0], fds[1]};
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

ExitStatus decode(int raw) {
    if (WIFSIGNALED(raw)) return {true, WTERMSIG(raw)};
    return {false, WEXITSTATUS(raw)};
}

std::vector<std::string> merged_environment(const std::map<std::string, std::string>& extra) {
    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos && extra.contains(entry.substr(0, eq))) continue;
        env.push_back(std::move(entry));
    }
    for (const auto& [k, v] : extra) env.push_back(k + "=" + v);
    return env;
}

} // namespace

Process Process::spawn(const SpawnOptions& options) {
    if (options.argv.empty()) throw Error(ErrorCode::SpawnFailure, "empty command");

    Pipe in, out, err;
    Process p;
    try {
        if (options.pipe_stdin) in = make_pipe();
        if (options.pipe_stdout) out = make_pipe();
        if (options.pipe_stderr) err = make_pipe();
    } catch (...) {
        for (int* fd : {&in.read, &in.write, &out.read, &out.write, &err.read, &err.write}) close_fd(*fd);
        throw;
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    if (options.pipe_stdin) {
        posix_spawn_file_actions_adddup2(&actions, in.read, STDIN_FILENO);
    } else {
        posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    }
    if (options.pipe_stdout) posix_spawn_file_actions_adddup2(&actions, out.write, STDOUT_FILENO);
    if (options.pipe_stderr) posix_spawn_file_actions_adddup2(&actions, err.write, STDERR_FILENO);

    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGMASK |
                                        POSIX_SPAWN_SETSIGDEF);
    posix_spawnattr_setpgroup(&attr, 0);
    sigset_t none, defaults;
    sigemptyset(&none);
    posix_spawnattr_setsigmask(&attr, &none);
    sigemptyset(&defaults);
    sigaddset(&defaults, SIGPIPE);
    sigaddset(&defaults, SIGTERM);
    sigaddset(&defaults, SIGINT);
    posix_spawnattr_setsigdefault(&attr, &defaults);

    std::vector<char*> argv;
    for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    const auto env_strings = merged_environment(options.env);
    std::vector<char*> envp;
    for (const auto& e : env_strings) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);

    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);

    close_fd(in.read);
    close_fd(out.write);
    close_fd(err.write);
    if (rc != 0) {
        close_fd(in.write);
        close_fd(out.read);
        close_fd(err.read);
        throw Error(ErrorCode::SpawnFailure, options.argv[0] + ": " + std::strerror(rc));
    }
    p.pid_ = pid;
    p.in_ = in.write;
    p.out_ = out.read;
    p.err_ = err.read;
    return p;
}

Process::Process(Process&& other) noexcept { *this = std::move(other); }

Process& Process::operator=(Process&& other) noexcept {
    if (this != &other) {
        if (pid_ > 0 && !status_) terminate(std::chrono::milliseconds(0));
        close_fds();
        pid_ = std::exchange(other.pid_, -1);
        in_ = std::exchange(other.in_, -1);
        out_ = std::exchange(other.out_, -1);
        err_ = std::exchange(other.err_, -1);
        status_ = std::exchange(other.status_, std::nullopt);
    }
    return *this;
}

Process::~Process() {
    if (pid_ > 0 && !status_) terminate(std::chrono::milliseconds(0));
    close_fds();
}

void Process::close_fds() {
    close_fd(in_);
    close_fd(out_);
    close_fd(err_);
}

void Process::close_stdin() { close_fd(in_); }

std::optional<ExitStatus> Process::poll() {
    if (status_ || pid_ <= 0) return status_;
    int raw = 0;
    const pid_t r = ::waitpid(pid_, &raw, WNOHANG);
    if (r == pid_) status_ = decode(raw);
    return status_;
}

ExitStatus Process::wait() {
    if (status_) return *status_;
    int raw = 0;
    while (::waitpid(pid_, &raw, 0) < 0) {
        if (errno != EINTR) return *(status_ = ExitStatus{true, SIGKILL});
    }
    status_ = decode(raw);
    return *status_;
}

std::optional<ExitStatus> Process::wait_for(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!poll()) {
        if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return status_;
}

void Process::signal(int sig) {
    if (pid_ <= 0 || status_) return;
    if (::kill(-pid_, sig) != 0) ::kill(pid_, sig);
}

ExitStatus Process::terminate(std::chrono::milliseconds grace) {
    if (poll()) {
        // Leftover members of the group (grandchildren) go too.
        ::kill(-pid_, SIGKILL);
        return *status_;
    }
    if (grace.count() > 0) {
        signal(SIGTERM);
        if (auto s = wait_for(grace)) {
            ::kill(-pid_, SIGKILL);
            return *s;
        }
    }
    signal(SIGKILL);
    return wait();
}

} // namespace beestar
