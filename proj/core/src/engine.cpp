#include "beestar/engine.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "beestar/error.hpp"

namespace beestar {

using nlohmann::json;

namespace {

struct WaveAbort {
    WaveStatus status;
    std::string detail;
};

// Staging area for one wave. Reads the committed graph, never writes it.
class Wave {
public:
    Wave(const Graph& graph, std::uint64_t id) : graph_(graph), id_(id) {}

    void stage(EntityId entity, const std::string& prop, const Value& value, const Cause& cause) {
        const Entity& e = graph_.entity(entity);
        const Property* p = e.find(prop);
        if (!p) {
            throw WaveAbort{WaveStatus::TypeError, e.name + " has no property '" + prop + "'"};
        }
        auto key = std::make_pair(entity.value, prop);
        if (visited_.contains(key)) {
            throw WaveAbort{WaveStatus::CycleError,
                            e.name + "." + prop + " assigned twice in wave " + std::to_string(id_)};
        }
        if (!assignable(p->declared_type, value)) {
            throw WaveAbort{WaveStatus::TypeError,
                            e.name + "." + prop + " is declared " +
                                std::string(to_string(p->declared_type)) + ", got " +
                                std::string(to_string(value.type()))};
        }
        visited_.insert(key);
        events.push_back(ChangeEvent{0, id_, e.name, prop, p->value, value, p->version + 1, cause});
        const std::uint64_t version = p->version + 1;

        if (graph_.kinds().emission_property(e.kind) == prop) {
            for (const Edge* edge : graph_.set_edges(entity)) {
                const Entity& target = graph_.entity(edge->to);
                if (!target.find(edge->label.prop)) continue; // lax-mode dangling edge
                stage(edge->to, edge->label.prop, value, Cause::sets_edge(e.name));
            }
        }
        for (const Edge* edge : graph_.watch_edges(entity, prop)) {
            const Entity& watcher = graph_.entity(edge->from);
            if (graph_.kinds().is_a(watcher.kind, kind::Agent)) {
                stage(edge->from, std::string(beestar::prop::Input), value, Cause::watch_fill(e.name));
                triggers.push_back({edge->ordinal, Trigger{id_, watcher.name, value, 0, 0}});
            } else {
                notifications.push_back(
                    {edge->ordinal, Notification{id_, watcher.name, e.name, prop, version}});
            }
        }
    }

    std::vector<ChangeEvent> events;
    std::vector<std::pair<std::uint64_t, Notification>> notifications;
    std::vector<std::pair<std::uint64_t, Trigger>> triggers;

private:
    const Graph& graph_;
    std::uint64_t id_;
    std::set<std::pair<std::uint64_t, std::string>> visited_;
};

template <typename T>
std::vector<T> by_ordinal(std::vector<std::pair<std::uint64_t, T>> items) {
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<T> out;
    out.reserve(items.size());
    for (auto& [_, t] : items) out.push_back(std::move(t));
    return out;
}

} // namespace

Engine::Engine(Graph graph, EngineOptions options)
    : options_(std::move(options)), graph_(std::move(graph)) {
    if (options_.log_path) {
        log_file_.open(*options_.log_path, std::ios::app);
        if (!log_file_) {
            throw Error(ErrorCode::ValidationError,
                        "cannot open event log " + options_.log_path->string());
        }
    }
    dispatcher_ = std::thread([this] { dispatch_loop(); });
}

Engine::~Engine() {
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    dispatcher_.join();
}

WaveReport Engine::set_property(std::string_view entity, std::string_view prop, Value value,
                                const Cause& cause) {
    std::unique_lock lock(graph_mutex_);
    const Entity& target = graph_.entity(entity);
    if (!target.find(prop)) {
        throw Error(ErrorCode::UnknownProperty,
                    "'" + target.name + "' has no property '" + std::string(prop) + "'");
    }

    WaveReport report;
    report.wave = next_wave_++;

    ChainContext ctx;
    if (auto it = chains_.find(target.name); cause.agent_originated() && it != chains_.end()) {
        ctx = it->second;
    } else {
        ctx = ChainContext{next_chain_++, 0};
    }

    Wave wave(graph_, report.wave);
    try {
        wave.stage(target.id, std::string(prop), value, cause);
    } catch (const WaveAbort& abort) {
        ++stats_.waves_failed;
        report.status = abort.status;
        report.detail = abort.detail;
        return report;
    }

    // Commit. Every staged value was type-checked, so assign cannot fail.
    for (const auto& ev : wave.events) {
        graph_.assign(graph_.entity(ev.entity).id, ev.property, ev.new_value);
    }
    report.events = std::move(wave.events);
    for (auto& ev : report.events) {
        ev.seq = ++seq_;
        log_.push_back(ev);
        if (log_file_.is_open()) log_file_ << canonical_dump(ev.to_json()) << '\n';
    }
    if (log_file_.is_open()) log_file_.flush();
    report.notifications = by_ordinal(std::move(wave.notifications));
    for (auto& t : by_ordinal(std::move(wave.triggers))) {
        t.chain = ctx.chain;
        t.hop = ctx.hop + 1;
        if (t.hop > options_.max_chain_depth) {
            report.status = WaveStatus::ChainDepthExceeded;
            report.detail = "trigger of " + t.agent + " exceeds max chain depth " +
                            std::to_string(options_.max_chain_depth);
            ++stats_.triggers_suppressed;
            report.suppressed.push_back(std::move(t));
            continue;
        }
        chains_[t.agent] = ChainContext{t.chain, t.hop};
        report.triggers.push_back(std::move(t));
    }
    ++stats_.waves_committed;

    enqueue(Batch{report.events, report.notifications, report.triggers, std::nullopt});
    return report;
}

WaveReport Engine::apply_agent_output(std::string_view agent, Value value) {
    {
        std::shared_lock lock(graph_mutex_);
        const Entity* e = graph_.find(agent);
        if (!e || !graph_.kinds().is_a(e->kind, kind::Agent)) {
            throw Error(ErrorCode::UnknownAgent, "'" + std::string(agent) + "' is not an agent");
        }
    }
    return set_property(agent, prop::Output, std::move(value), Cause::agent_run());
}

EntityId Engine::create_entity(std::string name, std::string_view kind,
                               std::vector<PropertyInit> props) {
    std::unique_lock lock(graph_mutex_);
    const std::string n = name;
    EntityId id = graph_.create_entity(std::move(name), kind, std::move(props));
    record_delta("entity_created", json{{"name", n}, {"kind", std::string(kind)}});
    return id;
}

EdgeId Engine::add_edge(std::string_view from, std::string_view to, std::string_view label) {
    std::unique_lock lock(graph_mutex_);
    EdgeId id = graph_.add_edge(from, to, label);
    record_delta("edge_added", json{{"id", id.value},
                                    {"from", std::string(from)},
                                    {"to", std::string(to)},
                                    {"label", std::string(label)}});
    return id;
}

void Engine::remove_entity(std::string_view name) {
    std::unique_lock lock(graph_mutex_);
    graph_.remove_entity(name);
    chains_.erase(std::string(name));
    record_delta("entity_removed", json{{"name", std::string(name)}});
}

void Engine::remove_edge(EdgeId id) {
    std::unique_lock lock(graph_mutex_);
    graph_.remove_edge(id);
    record_delta("edge_removed", json{{"id", id.value}});
}

void Engine::load(const ProgramSpec& doc, Strictness strictness) {
    Graph fresh = load_program(doc, strictness);
    std::unique_lock lock(graph_mutex_);
    graph_ = std::move(fresh);
    chains_.clear();
    record_delta("graph_loaded", json{{"entities", doc.entities.size()}, {"edges", doc.edges.size()}});
}

void Engine::mutate(const std::function<void(Graph&)>& edit) {
    std::unique_lock lock(graph_mutex_);
    Graph scratch = graph_;
    edit(scratch);
    graph_ = std::move(scratch);
    record_delta("graph_edited", json::object());
}

Graph Engine::snapshot() const {
    std::shared_lock lock(graph_mutex_);
    return graph_;
}

ProgramSpec Engine::export_program() const {
    std::shared_lock lock(graph_mutex_);
    return beestar::export_program(graph_);
}

std::vector<ChangeEvent> Engine::event_log(std::uint64_t since) const {
    std::shared_lock lock(graph_mutex_);
    auto it = std::upper_bound(log_.begin(), log_.end(), since,
                               [](std::uint64_t s, const ChangeEvent& e) { return s < e.seq; });
    return {it, log_.end()};
}

std::uint64_t Engine::head() const {
    std::shared_lock lock(graph_mutex_);
    return seq_;
}

Engine::Stats Engine::stats() const {
    std::shared_lock lock(graph_mutex_);
    return stats_;
}

SubscriptionId Engine::subscribe(Scope scope, EventSink sink) {
    if (!scope.entity.empty()) {
        read([&](const Graph& g) {
            const Entity* e = g.find(scope.entity);
            if (!e || (!scope.property.empty() && !e->find(scope.property))) {
                throw Error(ErrorCode::UnknownScope,
                            "unknown scope " + scope.entity + "." + scope.property);
            }
            return 0;
        });
    } else if (!scope.property.empty()) {
        throw Error(ErrorCode::UnknownScope, "property scope without entity");
    }
    std::lock_guard lock(subs_mutex_);
    const SubscriptionId id = next_sub_++;
    subscribers_.emplace(id, Subscriber{Subscriber::Sink::Events, std::move(scope), std::move(sink), {}, {}});
    return id;
}

SubscriptionId Engine::subscribe_notifications(Scope scope, NotificationSink sink) {
    std::lock_guard lock(subs_mutex_);
    const SubscriptionId id = next_sub_++;
    subscribers_.emplace(
        id, Subscriber{Subscriber::Sink::Notifications, std::move(scope), {}, std::move(sink), {}});
    return id;
}

SubscriptionId Engine::subscribe_graph(DeltaSink sink) {
    std::lock_guard lock(subs_mutex_);
    const SubscriptionId id = next_sub_++;
    subscribers_.emplace(id, Subscriber{Subscriber::Sink::Deltas, Scope::all(), {}, {}, std::move(sink)});
    return id;
}

void Engine::unsubscribe(SubscriptionId id) {
    std::lock_guard lock(subs_mutex_);
    subscribers_.erase(id);
}

void Engine::set_trigger_sink(TriggerSink sink) {
    std::lock_guard lock(subs_mutex_);
    trigger_sink_ = std::move(sink);
}

void Engine::flush() {
    std::unique_lock lock(queue_mutex_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && !dispatching_; });
}

void Engine::record_delta(std::string op, json detail) {
    enqueue(Batch{{}, {}, {}, GraphDelta{++seq_, std::move(op), std::move(detail)}});
}

void Engine::enqueue(Batch batch) {
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back(std::move(batch));
    }
    queue_cv_.notify_one();
}

void Engine::dispatch_loop() {
    for (;;) {
        Batch batch;
        {
            std::unique_lock lock(queue_mutex_);
            dispatching_ = false;
            if (queue_.empty()) idle_cv_.notify_all();
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return; // stopping
            batch = std::move(queue_.front());
            queue_.pop_front();
            dispatching_ = true;
        }

        std::vector<Subscriber> subs;
        TriggerSink trigger_sink;
        {
            std::lock_guard lock(subs_mutex_);
            subs.reserve(subscribers_.size());
            for (const auto& [_, s] : subscribers_) subs.push_back(s);
            trigger_sink = trigger_sink_;
        }

        auto guarded = [](auto&& fn) {
            try {
                fn();
            } catch (const std::exception& e) {
                std::cerr << "beestar: subscriber failed: " << e.what() << '\n';
            }
        };

        for (const auto& s : subs) {
            if (s.sink == Subscriber::Sink::Events) {
                for (const auto& ev : batch.events) {
                    if (s.scope.matches(ev.entity, ev.property)) guarded([&] { s.on_event(ev); });
                }
            } else if (s.sink == Subscriber::Sink::Deltas && batch.delta) {
                guarded([&] { s.on_delta(*batch.delta); });
            }
        }
        for (const auto& n : batch.notifications) {
            for (const auto& s : subs) {
                if (s.sink == Subscriber::Sink::Notifications && s.scope.matches(n.entity, n.property)) {
                    guarded([&] { s.on_notification(n); });
                }
            }
        }
        if (trigger_sink) {
            for (const auto& t : batch.triggers) guarded([&] { trigger_sink(t); });
        }
    }
}

void replay(Graph& graph, const std::vector<ChangeEvent>& events) {
    for (const auto& ev : events) graph.restore(ev.entity, ev.property, ev.new_value, ev.version);
}

std::vector<ChangeEvent> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ValidationError, "cannot read " + path.string());
    std::vector<ChangeEvent> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(ChangeEvent::from_json(json::parse(line)));
    }
    return out;
}

} // namespace beestar
