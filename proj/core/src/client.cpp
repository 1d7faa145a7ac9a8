#include "beestar/client.hpp"

#include <algorithm>

#include <httplib.h>

namespace beestar {

using nlohmann::json;

std::string normalize_address(const std::string& address) {
    std::string a = address;
    if (a.rfind("http://", 0) == 0) a = a.substr(7);
    while (!a.empty() && a.back() == '/') a.pop_back();
    if (!a.empty() && a.front() == ':') a = "127.0.0.1" + a;
    if (a.find(':') == std::string::npos) a += ":7311";
    return "http://" + a;
}

struct ApiClient::Impl {
    std::string address;
    httplib::Client http;
    std::chrono::milliseconds timeout;

    Impl(const std::string& a, std::chrono::milliseconds t)
        : address(normalize_address(a)), http(address), timeout(t) {
        http.set_connection_timeout(t);
        http.set_read_timeout(t);
        http.set_write_timeout(t);
        http.set_keep_alive(true);
        http.set_tcp_nodelay(true);
    }

    json handle(const httplib::Result& r, const std::string& what) {
        if (!r) {
            throw Error(ErrorCode::Transport,
                        "server unreachable at " + address + " (" + httplib::to_string(r.error()) + ")");
        }
        json doc = r->body.empty() ? json() : json::parse(r->body, nullptr, false);
        if (r->status >= 200 && r->status < 300) {
            if (doc.is_discarded()) {
                throw Error(ErrorCode::ProtocolError, what + ": reply is not JSON");
            }
            return doc;
        }
        ErrorCode code = r->status == 404 ? ErrorCode::UnknownEntity
                         : r->status >= 500 ? ErrorCode::Transport
                                            : ErrorCode::ValidationError;
        std::string detail = what + ": HTTP " + std::to_string(r->status);
        if (!doc.is_discarded() && doc.is_object()) {
            if (doc.contains("error") && doc["error"].is_string()) {
                if (auto c = parse_error_code(doc["error"].get<std::string>())) code = *c;
            }
            if (doc.contains("detail") && doc["detail"].is_string()) detail = doc["detail"];
        }
        throw ApiError(r->status, code, detail);
    }
};

ApiClient::ApiClient(const std::string& address, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(address, timeout)) {}
ApiClient::~ApiClient() = default;
ApiClient::ApiClient(ApiClient&&) noexcept = default;
ApiClient& ApiClient::operator=(ApiClient&&) noexcept = default;

const std::string& ApiClient::address() const noexcept { return impl_->address; }

bool ApiClient::healthy() {
    auto r = impl_->http.Get("/health");
    return r && r->status == 200;
}

json ApiClient::get(const std::string& path) { return impl_->handle(impl_->http.Get(path), "GET " + path); }

json ApiClient::post(const std::string& path, const json& body) {
    return impl_->handle(impl_->http.Post(path, canonical_dump(body), "application/json"),
                         "POST " + path);
}

json ApiClient::put(const std::string& path, const json& body) {
    return impl_->handle(impl_->http.Put(path, canonical_dump(body), "application/json"),
                         "PUT " + path);
}

json ApiClient::del(const std::string& path) {
    return impl_->handle(impl_->http.Delete(path), "DELETE " + path);
}

ProgramSpec ApiClient::graph() { return ProgramSpec::from_json(get("/graph")); }

json ApiClient::load(const ProgramSpec& doc) { return post("/graph", doc.to_json()); }

json ApiClient::entities() { return get("/entities"); }

json ApiClient::entity(const std::string& name) { return get("/entities/" + name); }

json ApiClient::set_property(const std::string& entity, const std::string& prop, const json& value,
                             const std::string& cause) {
    return put("/entities/" + entity + "/properties/" + prop, {{"value", value}, {"cause", cause}});
}

json ApiClient::message(const std::string& agent, const std::string& verb) {
    return post("/agents/" + agent + "/message", {{"verb", verb}});
}

json ApiClient::agents() { return get("/agents"); }

void ApiClient::register_agent(const std::string& agent, const std::string& endpoint) {
    post("/agents/" + agent + "/register", {{"endpoint", endpoint}});
}

void ApiClient::unregister_agent(const std::string& agent) { del("/agents/" + agent + "/register"); }

bool ApiClient::heartbeat(const std::string& agent) {
    try {
        post("/agents/" + agent + "/heartbeat", json::object());
        return true;
    } catch (const ApiError& e) {
        if (e.status() == 404) return false;
        throw;
    }
}

bool ApiClient::stream_events(std::uint64_t since,
                              const std::function<bool(const json&)>& on_line) {
    // A separate connection: the stream holds it for its whole life.
    httplib::Client stream(impl_->address);
    stream.set_connection_timeout(impl_->timeout);
    stream.set_read_timeout(std::chrono::hours(24));
    std::string buffer;
    bool stopped = false;
    auto r = stream.Get("/events?since=" + std::to_string(since),
                        [&](const char* data, std::size_t n) {
                            buffer.append(data, n);
                            std::size_t pos;
                            while ((pos = buffer.find('\n')) != std::string::npos) {
                                const std::string line = buffer.substr(0, pos);
                                buffer.erase(0, pos + 1);
                                const json doc = json::parse(line, nullptr, false);
                                if (doc.is_discarded()) continue;
                                if (!on_line(doc)) {
                                    stopped = true;
                                    return false;
                                }
                            }
                            return true;
                        });
    return stopped || (r && r->status == 200);
}

namespace {

Value decode_property(const json& entity, const std::string& prop) {
    const json& p = entity.at("properties").at(prop);
    return Value::from_json(p.at("value"), parse_value_type(p.at("type").get<std::string>()));
}

} // namespace

std::pair<Value, Value> HttpGraphPort::fetch(const std::string& agent) {
    std::lock_guard lock(mutex_);
    json doc;
    try {
        doc = client_.entity(agent);
    } catch (const ApiError& e) {
        if (e.status() == 404) throw Error(ErrorCode::UnknownAgent, "no AgentEntity named '" + agent + "'");
        throw;
    }
    const auto& kinds = doc.at("kinds");
    if (std::find(kinds.begin(), kinds.end(), std::string(kind::Agent)) == kinds.end()) {
        throw Error(ErrorCode::UnknownAgent, "'" + agent + "' is not an AgentEntity");
    }
    return {decode_property(doc, std::string(prop::SourceCode)),
            decode_property(doc, std::string(prop::Input))};
}

void HttpGraphPort::apply_output(const std::string& agent, const Value& output) {
    std::lock_guard lock(mutex_);
    client_.set_property(agent, std::string(prop::Output), output.to_json(), "agent-run");
}

void HttpGraphPort::set_status(const std::string& agent, const std::string& status) {
    std::lock_guard lock(mutex_);
    client_.set_property(agent, std::string(prop::Status), status, "agent-status");
}

json HttpGraphPort::set_source_code(const std::string& agent, const Value& code) {
    std::lock_guard lock(mutex_);
    return client_.set_property(agent, std::string(prop::SourceCode), code.to_json(), "agent-code");
}

void HttpGraphPort::append_log(const std::string& agent, const std::vector<std::string>& lines) {
    if (lines.empty()) return;
    std::lock_guard lock(mutex_);
    const Graph g = load_program(client_.graph(), Strictness::Lax);
    for (const auto& name : log_watchers(g, agent)) {
        const Property* p = g.entity(name).find("lines");
        Array merged = p && p->value.type() == ValueType::Array ? p->value.as_array() : Array{};
        for (const auto& l : lines) merged.push_back(Value::string(l));
        client_.set_property(name, "lines", Value::array(std::move(merged)).to_json(), "agent-run");
    }
}

} // namespace beestar
