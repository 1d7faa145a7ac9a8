#pragma once

// HTTP face of an Engine.
//
//   GET  /health                             {"status":"ok","head":n}
//   GET  /graph        POST /graph           export / load a ProgramSpec
//   GET  /entities     POST /entities        list / create
//   GET  /entities/{name}   DELETE /entities/{name}
//   POST /edges        DELETE /edges/{id}
//   PUT  /entities/{name}/properties/{prop}  {"value":v,"cause":s}
//   GET  /agents                             registered agents
//   POST /agents/{name}/message              {"verb":"play|stop|debug"}
//   POST /agents/{name}/register             {"endpoint":"host:port"}
//   DELETE /agents/{name}/register
//   POST /agents/{name}/heartbeat
//   GET  /events?since=n                     NDJSON stream
//
// Errors are {"error":code,"detail":s} with 404 (unknown entity/agent/edge),
// 409 (cycle), 422 (type/validation) or 502 (agent unreachable).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "beestar/engine.hpp"
#include "beestar/error.hpp"

namespace beestar {

inline constexpr int kDefaultPort = 7311;

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = kDefaultPort; // 0 picks a free port
    std::optional<std::filesystem::path> ui_root;
    std::chrono::milliseconds heartbeat{15000};
    std::size_t client_buffer = 8192; // queued stream lines before a client is dropped
    std::chrono::milliseconds rpc_timeout{2000};
    Strictness strictness = Strictness::Strict;
};

int http_status(ErrorCode code) noexcept;

class AgentRegistry {
public:
    struct Entry {
        std::string endpoint;
        std::chrono::system_clock::time_point last_seen;
    };

    void add(const std::string& agent, const std::string& endpoint);
    void remove(const std::string& agent);
    /// False if the agent is not registered.
    bool touch(const std::string& agent);
    std::optional<std::string> endpoint(const std::string& agent) const;
    nlohmann::json to_json() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

class Server {
public:
    Server(Engine& engine, ServerOptions options = {});
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and serves on a background thread. Throws Error(Transport).
    void start();
    /// Blocks until stop() (from another thread or a signal handler path).
    void wait();
    void stop();

    int port() const noexcept;
    std::string address() const;
    AgentRegistry& agents() noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace beestar
