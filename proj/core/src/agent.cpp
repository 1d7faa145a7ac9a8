#include "beestar/agent.hpp"

#include <algorithm>
#include <iostream>

#include "beestar/error.hpp"

namespace beestar {

namespace {

void require_committed(const WaveReport& report) {
    if (report.committed()) return;
    throw Error(report.status == WaveStatus::CycleError ? ErrorCode::CycleError : ErrorCode::TypeError,
                report.detail);
}

} // namespace

std::vector<std::string> log_watchers(const Graph& graph, const std::string& agent) {
    std::vector<std::string> out;
    const Entity* target = graph.find(agent);
    if (!target) return out;
    for (const Edge* e : graph.edges()) {
        if (e->to != target->id || e->label.kind != EdgeLabel::Kind::Watches) continue;
        const Entity& watcher = graph.entity(e->from);
        if (!graph.is_a(watcher.name, kind::Log)) continue;
        if (std::find(out.begin(), out.end(), watcher.name) == out.end()) out.push_back(watcher.name);
    }
    return out;
}

std::pair<Value, Value> EnginePort::fetch(const std::string& agent) {
    return engine_.read([&](const Graph& g) {
        const Entity* e = g.find(agent);
        if (!e || !g.is_a(agent, kind::Agent)) {
            throw Error(ErrorCode::UnknownAgent, "no AgentEntity named '" + agent + "'");
        }
        return std::make_pair(e->find(prop::SourceCode)->value, e->find(prop::Input)->value);
    });
}

void EnginePort::apply_output(const std::string& agent, const Value& output) {
    require_committed(engine_.apply_agent_output(agent, output));
}

void EnginePort::set_status(const std::string& agent, const std::string& status) {
    require_committed(engine_.set_property(agent, prop::Status, Value::string(status),
                                           Cause::agent_status()));
}

nlohmann::json EnginePort::set_source_code(const std::string& agent, const Value& code) {
    const WaveReport report =
        engine_.set_property(agent, prop::SourceCode, code, Cause::agent_code());
    require_committed(report);
    return report.summary();
}

void EnginePort::append_log(const std::string& agent, const std::vector<std::string>& lines) {
    if (lines.empty()) return;
    const auto targets = engine_.read([&](const Graph& g) {
        std::vector<std::pair<std::string, Value>> out;
        for (const auto& name : log_watchers(g, agent)) {
            const Property* p = g.entity(name).find("lines");
            out.emplace_back(name, p ? p->value : Value());
        }
        return out;
    });
    for (const auto& [name, current] : targets) {
        Array merged = current.type() == ValueType::Array ? current.as_array() : Array{};
        for (const auto& l : lines) merged.push_back(Value::string(l));
        engine_.set_property(name, "lines", Value::array(std::move(merged)), Cause::agent_run());
    }
}

std::string_view to_string(AgentState s) noexcept {
    switch (s) {
    case AgentState::Idle: return "idle";
    case AgentState::Running: return "running";
    case AgentState::Stopping: return "stopping";
    case AgentState::Error: return "error";
    }
    return "error";
}

AgentRuntime::AgentRuntime(std::string name, GraphPort& port, Executor& executor)
    : AgentRuntime(std::move(name), port, executor, Options{}) {}

AgentRuntime::AgentRuntime(std::string name, GraphPort& port, Executor& executor, Options options)
    : name_(std::move(name)), port_(port), executor_(executor), options_(options) {}

AgentRuntime::~AgentRuntime() {
    {
        std::lock_guard lock(mutex_);
        shutdown_ = true;
        pending_.reset();
        if (current_) current_->cancel();
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

void AgentRuntime::start() {
    std::lock_guard lock(mutex_);
    if (started_) return;
    started_ = true;
    transition(AgentState::Idle);
    worker_ = std::thread([this] { worker_loop(); });
}

void AgentRuntime::play(ExecutionMode mode) {
    {
        std::lock_guard lock(mutex_);
        if (shutdown_) return;
        pending_ = mode;
    }
    cv_.notify_all();
}

void AgentRuntime::stop() {
    std::lock_guard lock(mutex_);
    pending_.reset();
    if (current_ && !current_->cancelled()) {
        current_->cancel();
        transition(AgentState::Stopping);
    }
    cv_.notify_all();
}

nlohmann::json AgentRuntime::self_modify(const Value& code) {
    if (code.type() != ValueType::Code) {
        throw Error(ErrorCode::TypeError, "source code must be a code value, got " +
                                              std::string(to_string(code.type())));
    }
    return port_.set_source_code(name_, code);
}

bool AgentRuntime::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return !busy_ && !pending_; });
}

AgentState AgentRuntime::state() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::uint64_t AgentRuntime::executions() const {
    std::lock_guard lock(mutex_);
    return executions_;
}

std::optional<ExecutionResult> AgentRuntime::last_result() const {
    std::lock_guard lock(mutex_);
    return last_;
}

void AgentRuntime::transition(AgentState next, const std::string& detail) {
    state_ = next;
    std::string text(to_string(next));
    if (next == AgentState::Error && !detail.empty()) text += ": " + detail;
    try {
        port_.set_status(name_, text);
    } catch (const std::exception& e) {
        std::cerr << "beestar-agent " << name_ << ": status write failed: " << e.what() << "\n";
    }
}

ExecutionResult AgentRuntime::execute(ExecutionMode mode, CancelToken& cancel) {
    Value code, input;
    try {
        std::tie(code, input) = port_.fetch(name_);
    } catch (const std::exception& e) {
        ExecutionResult r;
        r.failure = e.what();
        r.exit_status = 1;
        return r;
    }
    if (code.type() != ValueType::Code) {
        ExecutionResult r;
        r.failure = "missing source code";
        r.exit_status = 1;
        return r;
    }
    try {
        return executor_.run(code.as_code(), input, mode, cancel);
    } catch (const std::exception& e) {
        ExecutionResult r;
        r.failure = e.what();
        r.exit_status = 1;
        return r;
    }
}

void AgentRuntime::worker_loop() {
    std::unique_lock lock(mutex_);
    for (;;) {
        cv_.wait(lock, [&] { return shutdown_ || pending_.has_value(); });
        if (shutdown_) break;
        const ExecutionMode mode = *pending_;
        pending_.reset();
        auto token = std::make_shared<CancelToken>();
        current_ = token;
        busy_ = true;
        transition(AgentState::Running);

        lock.unlock();
        ExecutionResult result = execute(mode, *token);
        lock.lock();

        ++executions_;
        if (token->cancelled()) {
            result.output.reset();
            result.cancelled = true;
            if (result.failure.empty()) result.failure = "cancelled";
            transition(AgentState::Idle);
        } else if (result.ok()) {
            try {
                port_.apply_output(name_, *result.output);
                transition(AgentState::Idle);
            } catch (const std::exception& e) {
                result.output.reset();
                result.failure = std::string("output rejected: ") + e.what();
                transition(AgentState::Error, result.failure);
            }
        } else {
            transition(AgentState::Error, result.failure);
        }
        if (!result.log.empty()) {
            try {
                port_.append_log(name_, result.log);
            } catch (const std::exception& e) {
                std::cerr << "beestar-agent " << name_ << ": log write failed: " << e.what() << "\n";
            }
        }
        last_ = std::move(result);
        current_.reset();
        busy_ = false;
        cv_.notify_all();
    }
    busy_ = false;
    cv_.notify_all();
}

} // namespace beestar
