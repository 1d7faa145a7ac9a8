#pragma once

// HTTP client for the server routes, and the agent's GraphPort over it.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "beestar/agent.hpp"
#include "beestar/error.hpp"
#include "beestar/program.hpp"

namespace beestar {

/// A non-2xx reply. `code()` is parsed from the {"error":..} body.
class ApiError : public Error {
public:
    ApiError(int status, ErrorCode code, const std::string& detail)
        : Error(code, detail), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class ApiClient {
public:
    /// `address` is "http://host:port", "host:port" or ":port".
    explicit ApiClient(const std::string& address,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
    ~ApiClient();
    ApiClient(ApiClient&&) noexcept;
    ApiClient& operator=(ApiClient&&) noexcept;

    const std::string& address() const noexcept;

    /// GET /health without throwing.
    bool healthy();

    // Raw verbs; throw ApiError for non-2xx and Error(Transport) when the
    // server cannot be reached.
    nlohmann::json get(const std::string& path);
    nlohmann::json post(const std::string& path, const nlohmann::json& body);
    nlohmann::json put(const std::string& path, const nlohmann::json& body);
    nlohmann::json del(const std::string& path);

    ProgramSpec graph();
    nlohmann::json load(const ProgramSpec& doc);
    nlohmann::json entities();
    nlohmann::json entity(const std::string& name);
    /// Decodes `value` against the declared type server-side.
    nlohmann::json set_property(const std::string& entity, const std::string& prop,
                                const nlohmann::json& value,
                                const std::string& cause = "external-set");
    nlohmann::json message(const std::string& agent, const std::string& verb);
    nlohmann::json agents();
    void register_agent(const std::string& agent, const std::string& endpoint);
    void unregister_agent(const std::string& agent);
    /// False if the server no longer knows the registration.
    bool heartbeat(const std::string& agent);

    /// Reads /events?since=n, calling `on_line` per parsed line until it
    /// returns false or the stream ends. Returns false if the connection
    /// failed or dropped.
    bool stream_events(std::uint64_t since, const std::function<bool(const nlohmann::json&)>& on_line);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Normalizes an address to "http://host:port".
std::string normalize_address(const std::string& address);

/// Agent-side GraphPort backed by the server.
class HttpGraphPort : public GraphPort {
public:
    explicit HttpGraphPort(const std::string& address) : client_(address) {}

    std::pair<Value, Value> fetch(const std::string& agent) override;
    void apply_output(const std::string& agent, const Value& output) override;
    void set_status(const std::string& agent, const std::string& status) override;
    nlohmann::json set_source_code(const std::string& agent, const Value& code) override;
    void append_log(const std::string& agent, const std::vector<std::string>& lines) override;

    ApiClient& client() noexcept { return client_; }

private:
    std::mutex mutex_; // one request at a time on the shared connection
    ApiClient client_;
};

} // namespace beestar
