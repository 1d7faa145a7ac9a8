#pragma once

// Runs agent source code against an input value.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "beestar/value.hpp"

namespace beestar {

enum class ExecutionMode { Normal, Debug };

struct ExecutionResult {
    std::optional<Value> output; // set on success
    std::string failure;         // set on failure
    double duration = 0.0;       // seconds
    std::vector<std::string> log;
    int exit_status = 0;
    bool cancelled = false;

    bool ok() const noexcept { return output.has_value(); }
};

/// Shared between the runner and whoever wants the run stopped.
class CancelToken {
public:
    void cancel();
    bool cancelled() const noexcept { return flag_.load(); }
    /// Sleeps up to `d`; true if cancelled meanwhile.
    bool wait_for(std::chrono::milliseconds d);

private:
    std::atomic<bool> flag_{false};
    std::mutex mutex_;
    std::condition_variable cv_;
};

class Executor {
public:
    virtual ~Executor() = default;
    virtual ExecutionResult run(const Code& code, const Value& input, ExecutionMode mode,
                                CancelToken& cancel) = 0;
};

/// Named functions selected by `code.text` (language "builtin"):
///   identity, uppercase, sum, const:<json>, sleep:<seconds>,
///   label:<n>  string word -> n synthetic labeled frames,
///   fetch      link -> {"source": link, "frames": [...]}.
class BuiltinExecutor : public Executor {
public:
    ExecutionResult run(const Code& code, const Value& input, ExecutionMode mode,
                        CancelToken& cancel) override;
};

/// One child process per run. The code text is written to a temporary
/// file and started through the command template of its language; "{file}"
/// and "{entrypoint}" in the template are substituted.
class SubprocessExecutor : public Executor {
public:
    struct Options {
        std::map<std::string, std::vector<std::string>> commands = default_commands();
        std::map<std::string, std::vector<std::string>> debug_commands = default_debug_commands();
        std::chrono::milliseconds grace{1000};
        /// Extra environment for every child (BEESTAR_SERVER, BEESTAR_AGENT).
        std::map<std::string, std::string> env;
    };

    SubprocessExecutor() : SubprocessExecutor(Options{}) {}
    explicit SubprocessExecutor(Options options) : options_(std::move(options)) {}

    ExecutionResult run(const Code& code, const Value& input, ExecutionMode mode,
                        CancelToken& cancel) override;

    static std::map<std::string, std::vector<std::string>> default_commands();
    static std::map<std::string, std::vector<std::string>> default_debug_commands();

private:
    Options options_;
};

/// Builtin code goes to the builtin table, everything else to a subprocess.
class DispatchingExecutor : public Executor {
public:
    DispatchingExecutor() = default;
    explicit DispatchingExecutor(SubprocessExecutor::Options options)
        : subprocess_(std::move(options)) {}

    ExecutionResult run(const Code& code, const Value& input, ExecutionMode mode,
                        CancelToken& cancel) override;

private:
    BuiltinExecutor builtin_;
    SubprocessExecutor subprocess_;
};

} // namespace beestar
