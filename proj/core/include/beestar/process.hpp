#pragma once

// Child processes spawned in their own process group with piped stdio.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace beestar {

struct ExitStatus {
    bool signaled = false;
    int code = 0;   // exit code, or the signal number when signaled
    int shell_code() const noexcept { return signaled ? 128 + code : code; }
    bool success() const noexcept { return !signaled && code == 0; }
};

struct SpawnOptions {
    std::vector<std::string> argv;
    /// Added to (or replacing entries of) the parent's environment.
    std::map<std::string, std::string> env;
    /// Pipe stdin/stdout/stderr. Unpiped stdin reads /dev/null; unpiped
    /// stdout/stderr are inherited.
    bool pipe_stdin = true;
    bool pipe_stdout = true;
    bool pipe_stderr = true;
};

class Process {
public:
    /// Throws Error(SpawnFailure).
    static Process spawn(const SpawnOptions& options);

    Process() = default;
    Process(Process&& other) noexcept;
    Process& operator=(Process&& other) noexcept;
    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;
    /// Kills the process group and reaps the child if still running.
    ~Process();

    pid_t pid() const noexcept { return pid_; }
    int stdin_fd() const noexcept { return in_; }
    int stdout_fd() const noexcept { return out_; }
    int stderr_fd() const noexcept { return err_; }
    void close_stdin();

    /// Non-blocking probe; the exit status once the child has been reaped.
    std::optional<ExitStatus> poll();
    ExitStatus wait();
    /// Waits up to `timeout`.
    std::optional<ExitStatus> wait_for(std::chrono::milliseconds timeout);

    /// Signals the whole process group.
    void signal(int sig);
    /// SIGTERM, then SIGKILL after `grace`. Returns the reaped status.
    ExitStatus terminate(std::chrono::milliseconds grace);

private:
    void close_fds();

    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    int err_ = -1;
    std::optional<ExitStatus> status_;
};

} // namespace beestar
