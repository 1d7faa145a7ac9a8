#pragma once

// The single enforcement point for property updates.
//
// Every assignment runs as a wave: the new value is staged, Sets edges of an
// emission property restage their targets, agent watchers get their input
// staged and a play trigger queued, display watchers get a notification
// queued. Revisiting an (entity, prop) in one wave aborts it with no change.
// Committed waves are appended to the event log and dispatched to
// subscribers, then triggers, on a separate dispatch thread.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "beestar/events.hpp"
#include "beestar/graph.hpp"
#include "beestar/program.hpp"

namespace beestar {

struct EngineOptions {
    std::uint32_t max_chain_depth = 64;
    /// Append committed ChangeEvents here as canonical NDJSON when set.
    std::optional<std::filesystem::path> log_path;
};

/// Subscription filter: everything, one entity, or one (entity, prop).
struct Scope {
    std::string entity;   // empty = all
    std::string property; // empty = every property of `entity`

    static Scope all() { return {}; }
    static Scope of(std::string entity) { return {std::move(entity), {}}; }
    static Scope of(std::string entity, std::string prop) {
        return {std::move(entity), std::move(prop)};
    }
    bool matches(const std::string& e, const std::string& p) const {
        return (entity.empty() || entity == e) && (property.empty() || property == p);
    }
};

using SubscriptionId = std::uint64_t;
using EventSink = std::function<void(const ChangeEvent&)>;
using NotificationSink = std::function<void(const Notification&)>;
using DeltaSink = std::function<void(const GraphDelta&)>;
using TriggerSink = std::function<void(const Trigger&)>;

class Engine {
public:
    explicit Engine(Graph graph = Graph(), EngineOptions options = {});
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Runs one wave. Throws UnknownEntity / UnknownProperty before any
    /// staging; type and cycle failures come back as the report status.
    WaveReport set_property(std::string_view entity, std::string_view prop, Value value,
                            const Cause& cause = Cause::external());

    /// set_property(agent, "output", value, agent-run). Throws UnknownAgent
    /// if `agent` is not an AgentEntity.
    WaveReport apply_agent_output(std::string_view agent, Value value);

    // Structural writes, serialized with waves.
    EntityId create_entity(std::string name, std::string_view kind,
                           std::vector<PropertyInit> props = {});
    EdgeId add_edge(std::string_view from, std::string_view to, std::string_view label);
    void remove_entity(std::string_view name);
    void remove_edge(EdgeId id);
    /// Replaces the whole graph. Throws ValidationError, leaving the current
    /// graph in place.
    void load(const ProgramSpec& doc, Strictness strictness = Strictness::Strict);
    /// Arbitrary structural edit (builder use); recorded as one delta.
    void mutate(const std::function<void(Graph&)>& edit);

    /// Calls `fn` with the graph under a shared lock.
    template <typename Fn>
    auto read(Fn&& fn) const {
        std::shared_lock lock(graph_mutex_);
        return fn(static_cast<const Graph&>(graph_));
    }
    Graph snapshot() const;
    ProgramSpec export_program() const;

    /// Committed events with seq > since, in commit order.
    std::vector<ChangeEvent> event_log(std::uint64_t since = 0) const;
    /// Last assigned commit sequence (events and deltas).
    std::uint64_t head() const;

    SubscriptionId subscribe(Scope scope, EventSink sink);
    SubscriptionId subscribe_notifications(Scope scope, NotificationSink sink);
    SubscriptionId subscribe_graph(DeltaSink sink);
    void unsubscribe(SubscriptionId id);
    /// Receives play triggers after commit, in watch-edge ordinal order.
    void set_trigger_sink(TriggerSink sink);

    /// Blocks until everything committed so far has been dispatched.
    void flush();

    std::uint32_t max_chain_depth() const noexcept { return options_.max_chain_depth; }

    struct Stats {
        std::uint64_t waves_committed = 0;
        std::uint64_t waves_failed = 0;
        std::uint64_t triggers_suppressed = 0;
    };
    Stats stats() const;

private:
    struct Batch {
        std::vector<ChangeEvent> events;
        std::vector<Notification> notifications;
        std::vector<Trigger> triggers;
        std::optional<GraphDelta> delta;
    };
    struct Subscriber {
        enum class Sink { Events, Notifications, Deltas } sink;
        Scope scope;
        EventSink on_event;
        NotificationSink on_notification;
        DeltaSink on_delta;
    };
    struct ChainContext {
        std::uint64_t chain = 0;
        std::uint32_t hop = 0;
    };

    void record_delta(std::string op, nlohmann::json detail); // graph lock held
    void enqueue(Batch batch);
    void dispatch_loop();

    EngineOptions options_;

    mutable std::shared_mutex graph_mutex_;
    Graph graph_;
    std::vector<ChangeEvent> log_;
    std::uint64_t seq_ = 0;
    std::uint64_t next_wave_ = 1;
    std::uint64_t next_chain_ = 1;
    std::map<std::string, ChainContext, std::less<>> chains_;
    Stats stats_;
    std::ofstream log_file_;

    std::mutex subs_mutex_;
    std::map<SubscriptionId, Subscriber> subscribers_;
    TriggerSink trigger_sink_;
    SubscriptionId next_sub_ = 1;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<Batch> queue_;
    bool dispatching_ = false;
    bool stopping_ = false;
    std::thread dispatcher_;
};

/// Writes each event's new value and version onto `graph`.
void replay(Graph& graph, const std::vector<ChangeEvent>& events);

/// Reads an NDJSON event log file written by the engine.
std::vector<ChangeEvent> read_event_log(const std::filesystem::path& path);

} // namespace beestar
