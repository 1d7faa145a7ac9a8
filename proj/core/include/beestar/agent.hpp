#pragma once

// The agent side: a runtime that maps play/stop/debug onto executions of
// the graph-resident source code, and the port through which it reaches
// the graph.

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "beestar/engine.hpp"
#include "beestar/executor.hpp"

namespace beestar {

/// What an agent needs from the graph.
class GraphPort {
public:
    virtual ~GraphPort() = default;

    /// Current `source code` and `input` of the agent. Throws UnknownAgent.
    virtual std::pair<Value, Value> fetch(const std::string& agent) = 0;
    virtual void apply_output(const std::string& agent, const Value& output) = 0;
    virtual void set_status(const std::string& agent, const std::string& status) = 0;
    virtual nlohmann::json set_source_code(const std::string& agent, const Value& code) = 0;
    /// Appends to every LogEntity watching the agent; no-op without one.
    virtual void append_log(const std::string& agent, const std::vector<std::string>& lines) = 0;
};

/// In-process port straight onto an Engine.
class EnginePort : public GraphPort {
public:
    explicit EnginePort(Engine& engine) : engine_(engine) {}

    std::pair<Value, Value> fetch(const std::string& agent) override;
    void apply_output(const std::string& agent, const Value& output) override;
    void set_status(const std::string& agent, const std::string& status) override;
    nlohmann::json set_source_code(const std::string& agent, const Value& code) override;
    void append_log(const std::string& agent, const std::vector<std::string>& lines) override;

private:
    Engine& engine_;
};

/// LogEntity names with a watches edge onto `agent`, in edge order.
std::vector<std::string> log_watchers(const Graph& graph, const std::string& agent);

enum class AgentState { Idle, Running, Stopping, Error };

std::string_view to_string(AgentState s) noexcept;

/// At most one execution in flight; a play arriving meanwhile is kept as
/// one pending request (newest wins) and runs when the current one ends.
/// Every transition is mirrored to the agent's `status` property.
class AgentRuntime {
public:
    struct Options {
        std::chrono::milliseconds grace{1000};
    };

    AgentRuntime(std::string name, GraphPort& port, Executor& executor);
    AgentRuntime(std::string name, GraphPort& port, Executor& executor, Options options);
    ~AgentRuntime();

    AgentRuntime(const AgentRuntime&) = delete;
    AgentRuntime& operator=(const AgentRuntime&) = delete;

    const std::string& name() const noexcept { return name_; }

    /// Writes status "idle" and starts the worker.
    void start();
    /// Schedules a run (or replaces the pending one). Never blocks on execution.
    void play(ExecutionMode mode = ExecutionMode::Normal);
    void debug() { play(ExecutionMode::Debug); }
    /// Cancels the current run and drops the pending one. Idempotent.
    void stop();
    /// Writes new code through the graph; the next run picks it up.
    nlohmann::json self_modify(const Value& code);

    /// Blocks until nothing runs or is pending. False on timeout.
    bool wait_idle(std::chrono::milliseconds timeout);

    AgentState state() const;
    std::uint64_t executions() const;
    std::optional<ExecutionResult> last_result() const;

    /// Synchronous single run (no status scheduling); used by handle_play.
    ExecutionResult execute(ExecutionMode mode, CancelToken& cancel);

private:
    void worker_loop();
    void transition(AgentState next, const std::string& detail = {}); // mutex_ held

    std::string name_;
    GraphPort& port_;
    Executor& executor_;
    Options options_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    AgentState state_ = AgentState::Idle;
    std::optional<ExecutionMode> pending_;
    std::shared_ptr<CancelToken> current_;
    std::optional<ExecutionResult> last_;
    std::uint64_t executions_ = 0;
    bool busy_ = false;
    bool shutdown_ = false;
    bool started_ = false;
    std::thread worker_;
};

} // namespace beestar
