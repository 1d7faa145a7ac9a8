#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beestar/value.hpp"

namespace beestar {

/// Why a property changed. Text forms: "external-set", "sets-edge from <E>",
/// "watch-trigger from <E>", "agent-run", "agent-status", "agent-code".
struct Cause {
    enum class Kind { External, SetsEdge, WatchFill, AgentRun, AgentStatus, AgentCode };

    Kind kind = Kind::External;
    std::string source; // entity name for SetsEdge / WatchFill

    static Cause external() { return {Kind::External, {}}; }
    static Cause sets_edge(std::string from) { return {Kind::SetsEdge, std::move(from)}; }
    static Cause watch_fill(std::string from) { return {Kind::WatchFill, std::move(from)}; }
    static Cause agent_run() { return {Kind::AgentRun, {}}; }
    static Cause agent_status() { return {Kind::AgentStatus, {}}; }
    static Cause agent_code() { return {Kind::AgentCode, {}}; }

    bool agent_originated() const noexcept {
        return kind == Kind::AgentRun || kind == Kind::AgentStatus || kind == Kind::AgentCode;
    }

    std::string str() const;
    /// Throws Error(ValidationError).
    static Cause parse(std::string_view text);

    bool operator==(const Cause&) const = default;
};

struct ChangeEvent {
    std::uint64_t seq = 0; // global commit sequence
    std::uint64_t wave = 0;
    std::string entity;
    std::string property;
    Value old_value;
    Value new_value;
    std::uint64_t version = 0;
    Cause cause;

    bool operator==(const ChangeEvent&) const = default;

    nlohmann::json to_json() const;
    static ChangeEvent from_json(const nlohmann::json& doc);
};

/// A display-kind watcher must refresh: `display` watches `entity`.`property`.
struct Notification {
    std::uint64_t wave = 0;
    std::string display;
    std::string entity;
    std::string property;
    std::uint64_t version = 0;

    bool operator==(const Notification&) const = default;
};

/// Play trigger for an agent whose watched property changed.
struct Trigger {
    std::uint64_t wave = 0;
    std::string agent;
    Value input;
    std::uint64_t chain = 0;
    std::uint32_t hop = 0;

    bool operator==(const Trigger&) const = default;
};

/// Structural change to the graph (entity/edge added or removed, document
/// loaded). Shares the commit sequence with ChangeEvents.
struct GraphDelta {
    std::uint64_t seq = 0;
    std::string op;
    nlohmann::json detail;
};

enum class WaveStatus { Committed, TypeError, CycleError, ChainDepthExceeded };

std::string_view to_string(WaveStatus s) noexcept;

struct WaveReport {
    std::uint64_t wave = 0;
    WaveStatus status = WaveStatus::Committed;
    std::string detail;
    std::vector<ChangeEvent> events;
    std::vector<Notification> notifications;
    std::vector<Trigger> triggers;
    std::vector<Trigger> suppressed; // past max_chain_depth

    /// The wave's changes were applied (Committed or ChainDepthExceeded).
    bool committed() const noexcept {
        return status == WaveStatus::Committed || status == WaveStatus::ChainDepthExceeded;
    }

    /// {"wave","status","detail","events","triggers":[agent..],"notifications"}
    nlohmann::json summary() const;
};

} // namespace beestar
