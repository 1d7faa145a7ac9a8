#pragma once

// Agent message transport: 4-byte big-endian length + canonical JSON body
// over a loopback TCP stream, one request/reply per connection.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace beestar {

class AgentRuntime;

enum class Verb { Play, Stop, Debug };

std::string_view to_string(Verb v) noexcept;
/// Throws Error(ProtocolError).
Verb parse_verb(std::string_view text);

struct AgentMessage {
    std::uint64_t id = 0;
    Verb verb = Verb::Play;
    std::string sender;

    nlohmann::json to_json() const;
};

struct AgentReply {
    std::uint64_t id = 0;
    bool ok = true;
    std::string detail;

    nlohmann::json to_json() const;
    /// Throws Error(ProtocolError).
    static AgentReply from_json(const nlohmann::json& doc);
};

/// Blocking frame I/O on a connected socket. read_frame returns nullopt on
/// a clean EOF before the header; throws Error(Transport) otherwise.
void write_frame(int fd, const std::string& body);
std::optional<std::string> read_frame(int fd);

/// "host:port" → connected socket. Throws Error(AgentUnreachable).
int connect_endpoint(const std::string& endpoint, std::chrono::milliseconds timeout);

/// One round trip. Throws Error(AgentUnreachable) or Error(ProtocolError).
nlohmann::json rpc_call(const std::string& endpoint, const nlohmann::json& request,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

AgentReply send_message(const std::string& endpoint, const AgentMessage& message,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

/// Accept loop on its own thread; each connection is handled inline.
class RpcListener {
public:
    using Handler = std::function<nlohmann::json(const nlohmann::json&)>;

    /// Binds host:port (0 = ephemeral). Throws Error(Transport).
    explicit RpcListener(Handler handler, const std::string& host = "127.0.0.1", int port = 0);
    ~RpcListener();

    RpcListener(const RpcListener&) = delete;
    RpcListener& operator=(const RpcListener&) = delete;

    int port() const noexcept { return port_; }
    std::string endpoint() const;
    void stop();

private:
    void accept_loop();

    Handler handler_;
    std::string host_;
    int port_ = 0;
    int fd_ = -1;
    int wake_[2] = {-1, -1};
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

/// Maps a decoded request onto a runtime: play/stop/debug. Unknown verbs
/// and malformed bodies get an error reply echoing the id.
nlohmann::json dispatch_message(AgentRuntime& runtime, const nlohmann::json& request);

/// Runtime + listener, the message loop of one agent.
class AgentHost {
public:
    explicit AgentHost(AgentRuntime& runtime, const std::string& host = "127.0.0.1", int port = 0);

    std::string endpoint() const { return listener_.endpoint(); }
    void stop() { listener_.stop(); }

private:
    AgentRuntime& runtime_;
    RpcListener listener_;
};

} // namespace beestar
