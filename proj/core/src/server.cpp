#include "beestar/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <set>
#include <thread>

#include <httplib.h>

#include "beestar/rpc.hpp"

namespace beestar {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::UnknownEntity:
    case ErrorCode::UnknownProperty:
    case ErrorCode::UnknownEdge:
    case ErrorCode::UnknownAgent: return 404;
    case ErrorCode::CycleError:
    case ErrorCode::DuplicateName:
    case ErrorCode::DuplicateEdge: return 409;
    case ErrorCode::AgentUnreachable:
    case ErrorCode::Transport: return 502;
    default: return 422;
    }
}

void AgentRegistry::add(const std::string& agent, const std::string& endpoint) {
    std::lock_guard lock(mutex_);
    entries_[agent] = Entry{endpoint, std::chrono::system_clock::now()};
}

void AgentRegistry::remove(const std::string& agent) {
    std::lock_guard lock(mutex_);
    entries_.erase(agent);
}

bool AgentRegistry::touch(const std::string& agent) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(agent);
    if (it == entries_.end()) return false;
    it->second.last_seen = std::chrono::system_clock::now();
    return true;
}

std::optional<std::string> AgentRegistry::endpoint(const std::string& agent) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(agent);
    if (it == entries_.end()) return std::nullopt;
    return it->second.endpoint;
}

json AgentRegistry::to_json() const {
    std::lock_guard lock(mutex_);
    json out = json::array();
    for (const auto& [name, e] : entries_) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            e.last_seen.time_since_epoch())
                            .count();
        out.push_back({{"name", name}, {"endpoint", e.endpoint}, {"last_seen_ms", ms}});
    }
    return out;
}

namespace {

// One connected /events reader.
struct StreamClient {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::pair<std::uint64_t, std::string>> lines;
    std::uint64_t delivered = 0; // last seq written to the socket
    bool overflowed = false;
    bool replayed = false;
    std::vector<std::string> replay;
};

class StreamHub {
public:
    explicit StreamHub(std::size_t limit) : limit_(limit) {}

    void add(const std::shared_ptr<StreamClient>& c) {
        std::lock_guard lock(mutex_);
        clients_.insert(c);
    }
    void remove(const std::shared_ptr<StreamClient>& c) {
        std::lock_guard lock(mutex_);
        clients_.erase(c);
    }
    void publish(std::uint64_t seq, const std::string& line) {
        std::lock_guard lock(mutex_);
        for (const auto& c : clients_) {
            {
                std::lock_guard cl(c->mutex);
                if (c->overflowed) continue;
                if (c->lines.size() >= limit_) {
                    c->overflowed = true;
                    c->lines.clear();
                } else {
                    c->lines.emplace_back(seq, line);
                }
            }
            c->cv.notify_all();
        }
    }
    void wake_all() {
        std::lock_guard lock(mutex_);
        for (const auto& c : clients_) c->cv.notify_all();
    }

private:
    std::size_t limit_;
    std::mutex mutex_;
    std::set<std::shared_ptr<StreamClient>> clients_;
};

struct HttpError {
    int status;
    std::string code;
    std::string detail;
};

json entity_json(const Graph& g, const Entity& e) {
    json props = json::object();
    for (const auto& [name, p] : e.properties) {
        props[name] = {{"type", std::string(to_string(p.declared_type))},
                       {"value", p.value.to_json()},
                       {"version", p.version}};
    }
    json edges = json::array();
    for (const Edge* edge : g.edges()) {
        if (edge->from != e.id && edge->to != e.id) continue;
        edges.push_back({{"id", edge->id.value},
                         {"from", g.entity(edge->from).name},
                         {"to", g.entity(edge->to).name},
                         {"label", edge->label.str()}});
    }
    return {{"name", e.name},
            {"kind", e.kind},
            {"kinds", g.kind_chain(e.name)},
            {"properties", std::move(props)},
            {"edges", std::move(edges)}};
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded()) throw HttpError{400, "validation_error", "body is not JSON"};
    return doc;
}

const json& field(const json& doc, const char* name, json::value_t type) {
    if (!doc.is_object() || !doc.contains(name) || doc[name].type() != type) {
        throw HttpError{422, "validation_error", std::string("missing or mistyped field '") + name + "'"};
    }
    return doc[name];
}

} // namespace

struct Server::Impl {
    Engine& engine;
    ServerOptions options;
    httplib::Server http;
    AgentRegistry registry;
    StreamHub hub;
    std::thread thread;
    std::atomic<bool> running{false};
    std::atomic<bool> stopping{false};
    std::atomic<std::uint64_t> next_message{1};
    std::vector<SubscriptionId> subscriptions;
    int bound_port = 0;

    Impl(Engine& e, ServerOptions o) : engine(e), options(std::move(o)), hub(options.client_buffer) {}

    std::string classify(const ChangeEvent& ev) {
        if (ev.property != prop::Status) return "property_changed";
        const bool agent = engine.read([&](const Graph& g) {
            return g.contains(ev.entity) && g.is_a(ev.entity, kind::Agent);
        });
        return agent ? "agent_status" : "property_changed";
    }

    std::string event_line(const ChangeEvent& ev) {
        return canonical_dump({{"seq", ev.seq}, {"kind", classify(ev)}, {"payload", ev.to_json()}}) +
               "\n";
    }

    void forward_trigger(const Trigger& t) {
        const auto endpoint = registry.endpoint(t.agent);
        if (!endpoint) return; // not deployed; the trigger stays in the report only
        try {
            send_message(*endpoint, AgentMessage{next_message++, Verb::Play, "graph"},
                         options.rpc_timeout);
        } catch (const Error& e) {
            std::cerr << "beestar: play for " << t.agent << " failed: " << e.what() << "\n";
        }
    }

    void install_routes();
    void wire_engine() {
        subscriptions.push_back(engine.subscribe(Scope::all(), [this](const ChangeEvent& ev) {
            hub.publish(ev.seq, event_line(ev));
        }));
        subscriptions.push_back(engine.subscribe_graph([this](const GraphDelta& d) {
            hub.publish(d.seq, canonical_dump({{"seq", d.seq},
                                               {"kind", "graph_changed"},
                                               {"payload", {{"op", d.op}, {"detail", d.detail}}}}) +
                                   "\n");
        }));
        engine.set_trigger_sink([this](const Trigger& t) { forward_trigger(t); });
    }
    void unwire_engine() {
        engine.set_trigger_sink(nullptr);
        for (auto id : subscriptions) engine.unsubscribe(id);
        subscriptions.clear();
        engine.flush(); // callbacks already copied out by the dispatcher finish here
    }
};

namespace {

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        auto fail = [&](int status, const std::string& code, const std::string& detail) {
            res.status = status;
            res.set_content(canonical_dump({{"error", code}, {"detail", detail}}), "application/json");
        };
        try {
            fn(req, res);
        } catch (const HttpError& e) {
            fail(e.status, e.code, e.detail);
        } catch (const Error& e) {
            fail(http_status(e.code()), std::string(error_code_name(e.code())), e.what());
        } catch (const std::exception& e) {
            fail(500, "internal", e.what());
        }
    };
}

void reply(httplib::Response& res, const json& doc, int status = 200) {
    res.status = status;
    res.set_content(canonical_dump(doc), "application/json");
}

} // namespace

void Server::Impl::install_routes() {
    Engine& eng = engine;

    http.Get("/health", guarded([&eng](const auto&, auto& res) {
        reply(res, {{"status", "ok"}, {"head", eng.head()}});
    }));

    http.Get("/graph", guarded([&eng](const auto&, auto& res) {
        reply(res, eng.export_program().to_json());
    }));

    http.Post("/graph", guarded([this](const httplib::Request& req, auto& res) {
        const ProgramSpec doc = ProgramSpec::from_json(parse_body(req));
        engine.load(doc, options.strictness);
        reply(res, {{"entities", doc.entities.size()}, {"edges", doc.edges.size()}});
    }));

    http.Get("/entities", guarded([&eng](const auto&, auto& res) {
        reply(res, eng.read([](const Graph& g) {
            json out = json::array();
            for (const Entity& e : g.entities()) out.push_back({{"name", e.name}, {"kind", e.kind}});
            return out;
        }));
    }));

    http.Post("/entities", guarded([&eng](const httplib::Request& req, auto& res) {
        const json body = parse_body(req);
        const std::string name = field(body, "name", json::value_t::string);
        const std::string kind = field(body, "kind", json::value_t::string);
        std::vector<PropertyInit> props;
        if (body.contains("properties")) {
            const json& ps = field(body, "properties", json::value_t::object);
            for (const auto& [p, decl] : ps.items()) {
                const std::string tname = field(decl, "type", json::value_t::string);
                const ValueType t = parse_value_type(tname);
                props.push_back({p, t, decl.contains("value") ? Value::from_json(decl["value"], t)
                                                              : Value()});
            }
        }
        eng.create_entity(name, kind, std::move(props));
        reply(res, eng.read([&](const Graph& g) { return entity_json(g, g.entity(name)); }), 201);
    }));

    http.Get(R"(/entities/([^/]+))", guarded([&eng](const httplib::Request& req, auto& res) {
        const std::string name = req.matches[1];
        reply(res, eng.read([&](const Graph& g) { return entity_json(g, g.entity(name)); }));
    }));

    http.Delete(R"(/entities/([^/]+))", guarded([this](const httplib::Request& req, auto& res) {
        const std::string name = req.matches[1];
        engine.remove_entity(name);
        registry.remove(name);
        reply(res, {{"removed", name}});
    }));

    http.Post("/edges", guarded([&eng](const httplib::Request& req, auto& res) {
        const json body = parse_body(req);
        const std::string from = field(body, "from", json::value_t::string);
        const std::string to = field(body, "to", json::value_t::string);
        const std::string label = field(body, "label", json::value_t::string);
        const EdgeId id = eng.add_edge(from, to, label);
        reply(res, {{"id", id.value}, {"from", from}, {"to", to}, {"label", label}}, 201);
    }));

    http.Delete(R"(/edges/(\d+))", guarded([&eng](const httplib::Request& req, auto& res) {
        const std::uint64_t id = std::stoull(req.matches[1]);
        eng.remove_edge(EdgeId{id});
        reply(res, {{"removed", id}});
    }));

    http.Put(R"(/entities/([^/]+)/properties/([^/]+))",
             guarded([&eng](const httplib::Request& req, auto& res) {
                 const std::string entity = req.matches[1];
                 const std::string prop = req.matches[2];
                 const json body = parse_body(req);
                 if (!body.is_object() || !body.contains("value")) {
                     throw HttpError{422, "validation_error", "body needs a 'value' field"};
                 }
                 const Cause cause =
                     body.contains("cause")
                         ? Cause::parse(field(body, "cause", json::value_t::string).get<std::string>())
                         : Cause::external();
                 if (cause.kind == Cause::Kind::SetsEdge || cause.kind == Cause::Kind::WatchFill) {
                     throw HttpError{422, "validation_error",
                                     "cause '" + cause.str() + "' is reserved for propagation"};
                 }
                 const ValueType declared = eng.read([&](const Graph& g) {
                     return g.property(entity, prop).declared_type;
                 });
                 // a document that does not fit the declared type still goes to the
                 // engine, which rejects it as a failed wave like a direct call would
                 Value value;
                 try {
                     value = Value::from_json(body["value"], declared);
                 } catch (const Error& e) {
                     if (e.code() != ErrorCode::TypeError) throw;
                     value = Value::from_json(body["value"]);
                 }
                 WaveReport report;
                 if (cause.kind == Cause::Kind::AgentRun) {
                     if (prop != prop::Output) {
                         throw HttpError{422, "validation_error", "agent-run writes only 'output'"};
                     }
                     report = eng.apply_agent_output(entity, value);
                 } else {
                     report = eng.set_property(entity, prop, value, cause);
                 }
                 json summary = report.summary();
                 if (report.committed()) return reply(res, summary);
                 const ErrorCode code = report.status == WaveStatus::CycleError
                                            ? ErrorCode::CycleError
                                            : ErrorCode::TypeError;
                 reply(res,
                       {{"error", std::string(error_code_name(code))},
                        {"detail", report.detail},
                        {"report", std::move(summary)}},
                       http_status(code));
             }));

    http.Get("/agents", guarded([this](const auto&, auto& res) { reply(res, registry.to_json()); }));

    auto require_agent = [this](const std::string& name) {
        const bool ok = engine.read(
            [&](const Graph& g) { return g.contains(name) && g.is_a(name, kind::Agent); });
        if (!ok) throw Error(ErrorCode::UnknownAgent, "no AgentEntity named '" + name + "'");
    };

    http.Post(R"(/agents/([^/]+)/message)",
              guarded([this, require_agent](const httplib::Request& req, auto& res) {
                  const std::string name = req.matches[1];
                  const json body = parse_body(req);
                  const Verb verb = parse_verb(field(body, "verb", json::value_t::string).get<std::string>());
                  require_agent(name);
                  const auto endpoint = registry.endpoint(name);
                  if (!endpoint) {
                      throw Error(ErrorCode::AgentUnreachable, "agent '" + name + "' is not registered");
                  }
                  const std::string sender = body.contains("sender") && body["sender"].is_string()
                                                 ? body["sender"].get<std::string>()
                                                 : "api";
                  const AgentReply r = send_message(*endpoint, AgentMessage{next_message++, verb, sender},
                                                    options.rpc_timeout);
                  if (!r.ok) throw Error(ErrorCode::ProtocolError, r.detail);
                  reply(res, r.to_json());
              }));

    http.Post(R"(/agents/([^/]+)/register)",
              guarded([this, require_agent](const httplib::Request& req, auto& res) {
                  const std::string name = req.matches[1];
                  const json body = parse_body(req);
                  const std::string endpoint = field(body, "endpoint", json::value_t::string);
                  require_agent(name);
                  registry.add(name, endpoint);
                  reply(res, {{"registered", name}, {"endpoint", endpoint}});
              }));

    http.Delete(R"(/agents/([^/]+)/register)", guarded([this](const httplib::Request& req, auto& res) {
        const std::string name = req.matches[1];
        registry.remove(name);
        reply(res, {{"unregistered", name}});
    }));

    http.Post(R"(/agents/([^/]+)/heartbeat)", guarded([this](const httplib::Request& req, auto& res) {
        const std::string name = req.matches[1];
        if (!registry.touch(name)) {
            throw Error(ErrorCode::UnknownAgent, "agent '" + name + "' is not registered");
        }
        reply(res, {{"agent", name}});
    }));

    http.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t since = 0;
        if (req.has_param("since")) {
            try {
                since = std::stoull(req.get_param_value("since"));
            } catch (const std::exception&) {
                res.status = 422;
                res.set_content(canonical_dump({{"error", "validation_error"},
                                                {"detail", "bad since cursor"}}),
                                "application/json");
                return;
            }
        }
        auto client = std::make_shared<StreamClient>();
        hub.add(client);
        // Registered before reading the log: anything committed from here on
        // arrives live; duplicates of replayed events are dropped by seq.
        const std::uint64_t head = engine.head();
        client->delivered = std::min(since, head);
        for (const auto& ev : engine.event_log(since)) {
            client->replay.push_back(event_line(ev));
            client->delivered = std::max(client->delivered, ev.seq);
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [this, client](std::size_t, httplib::DataSink& sink) {
                if (!client->replayed) {
                    client->replayed = true;
                    for (const auto& line : client->replay) {
                        if (!sink.write(line.data(), line.size())) return false;
                    }
                    client->replay.clear();
                    client->replay.shrink_to_fit();
                }
                std::deque<std::pair<std::uint64_t, std::string>> batch;
                {
                    std::unique_lock lock(client->mutex);
                    client->cv.wait_for(lock, options.heartbeat, [&] {
                        return !client->lines.empty() || client->overflowed || stopping.load();
                    });
                    if (client->overflowed || stopping) return false;
                    batch.swap(client->lines);
                }
                if (batch.empty()) {
                    const std::string beat = canonical_dump({{"seq", client->delivered},
                                                             {"kind", "heartbeat"},
                                                             {"payload", json::object()}}) +
                                             "\n";
                    return sink.write(beat.data(), beat.size());
                }
                for (const auto& [seq, line] : batch) {
                    if (seq <= client->delivered) continue;
                    if (!sink.write(line.data(), line.size())) return false;
                    client->delivered = seq;
                }
                return true;
            },
            [this, client](bool) { hub.remove(client); });
    });

    if (options.ui_root) {
        if (!http.set_mount_point("/", options.ui_root->string())) {
            throw Error(ErrorCode::ValidationError, "ui path " + options.ui_root->string() +
                                                        " is not a directory");
        }
    }
}

Server::Server(Engine& engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(engine, std::move(options))) {
    impl_->http.new_task_queue = [] { return new httplib::ThreadPool(32); };
    impl_->http.set_tcp_nodelay(true);
    impl_->install_routes();
}

Server::~Server() { stop(); }

void Server::start() {
    if (impl_->running) return;
    Impl& s = *impl_;
    if (s.options.port == 0) {
        s.bound_port = s.http.bind_to_any_port(s.options.host);
    } else {
        s.bound_port = s.http.bind_to_port(s.options.host, s.options.port) ? s.options.port : -1;
    }
    if (s.bound_port <= 0) {
        throw Error(ErrorCode::Transport, "cannot listen on " + s.options.host + ":" +
                                              std::to_string(s.options.port));
    }
    s.wire_engine();
    s.running = true;
    s.thread = std::thread([&s] { s.http.listen_after_bind(); });
    s.http.wait_until_ready();
}

void Server::wait() {
    while (impl_->running) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void Server::stop() {
    Impl& s = *impl_;
    if (!s.running.exchange(false)) return;
    s.stopping = true;
    s.hub.wake_all();
    s.unwire_engine();
    s.http.stop();
    if (s.thread.joinable()) s.thread.join();
}

int Server::port() const noexcept { return impl_->bound_port; }

std::string Server::address() const {
    return "http://" + impl_->options.host + ":" + std::to_string(impl_->bound_port);
}

AgentRegistry& Server::agents() noexcept { return impl_->registry; }

} // namespace beestar
