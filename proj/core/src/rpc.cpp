#include "beestar/rpc.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "beestar/agent.hpp"
#include "beestar/error.hpp"
#include "beestar/value.hpp"

namespace beestar {

using nlohmann::json;

namespace {

constexpr std::uint32_t kMaxFrame = 16u << 20;

void set_timeout(int fd, std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

bool read_exact(int fd, char* buf, std::size_t n, bool eof_ok) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) {
            if (eof_ok && got == 0) return false;
            throw Error(ErrorCode::Transport, "connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::Transport, std::string("recv: ") + std::strerror(errno));
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

std::pair<std::string, int> split_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
        throw Error(ErrorCode::AgentUnreachable, "bad endpoint '" + endpoint + "'");
    }
    try {
        return {endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1))};
    } catch (const std::exception&) {
        throw Error(ErrorCode::AgentUnreachable, "bad endpoint '" + endpoint + "'");
    }
}

struct Socket {
    int fd = -1;
    ~Socket() {
        if (fd >= 0) ::close(fd);
    }
};

} // namespace

std::string_view to_string(Verb v) noexcept {
    switch (v) {
    case Verb::Play: return "play";
    case Verb::Stop: return "stop";
    case Verb::Debug: return "debug";
    }
    return "play";
}

Verb parse_verb(std::string_view text) {
    if (text == "play") return Verb::Play;
    if (text == "stop") return Verb::Stop;
    if (text == "debug") return Verb::Debug;
    throw Error(ErrorCode::ProtocolError, "unknown verb '" + std::string(text) + "'");
}

json AgentMessage::to_json() const {
    json doc = {{"id", id}, {"verb", std::string(to_string(verb))}};
    if (!sender.empty()) doc["sender"] = sender;
    return doc;
}

json AgentReply::to_json() const {
    return {{"id", id}, {"status", ok ? "ok" : "error"}, {"detail", detail}};
}

AgentReply AgentReply::from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_number_unsigned() ||
        !doc.contains("status") || !doc["status"].is_string()) {
        throw Error(ErrorCode::ProtocolError, "malformed reply: " + doc.dump());
    }
    const std::string status = doc["status"];
    if (status != "ok" && status != "error") {
        throw Error(ErrorCode::ProtocolError, "bad reply status '" + status + "'");
    }
    AgentReply r;
    r.id = doc["id"].get<std::uint64_t>();
    r.ok = status == "ok";
    if (doc.contains("detail") && doc["detail"].is_string()) r.detail = doc["detail"];
    return r;
}

void write_frame(int fd, const std::string& body) {
    if (body.size() > kMaxFrame) throw Error(ErrorCode::ProtocolError, "frame too large");
    const std::uint32_t n = htonl(static_cast<std::uint32_t>(body.size()));
    std::string frame(reinterpret_cast<const char*>(&n), 4);
    frame += body;
    std::size_t sent = 0;
    while (sent < frame.size()) {
        const ssize_t r = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::Transport, std::string("send: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(r);
    }
}

std::optional<std::string> read_frame(int fd) {
    char header[4];
    if (!read_exact(fd, header, 4, true)) return std::nullopt;
    std::uint32_t n;
    std::memcpy(&n, header, 4);
    n = ntohl(n);
    if (n > kMaxFrame) throw Error(ErrorCode::ProtocolError, "frame too large");
    std::string body(n, '\0');
    read_exact(fd, body.data(), n, false);
    return body;
}

int connect_endpoint(const std::string& endpoint, std::chrono::milliseconds timeout) {
    const auto [host, port] = split_endpoint(endpoint);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
        throw Error(ErrorCode::AgentUnreachable, "cannot resolve '" + host + "'");
    }
    const int fd = ::socket(res->ai_family, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw Error(ErrorCode::AgentUnreachable, std::string("socket: ") + std::strerror(errno));
    }
    set_timeout(fd, timeout);
    const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0) {
        const int err = errno;
        ::close(fd);
        throw Error(ErrorCode::AgentUnreachable,
                    "connect " + endpoint + ": " + std::strerror(err));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return fd;
}

json rpc_call(const std::string& endpoint, const json& request, std::chrono::milliseconds timeout) {
    Socket s{connect_endpoint(endpoint, timeout)};
    std::optional<std::string> body;
    try {
        write_frame(s.fd, canonical_dump(request));
        body = read_frame(s.fd);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Transport) throw Error(ErrorCode::AgentUnreachable, e.what());
        throw;
    }
    if (!body) throw Error(ErrorCode::AgentUnreachable, "no reply from " + endpoint);
    const json doc = json::parse(*body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::ProtocolError, "reply is not JSON");
    return doc;
}

AgentReply send_message(const std::string& endpoint, const AgentMessage& message,
                        std::chrono::milliseconds timeout) {
    AgentReply reply = AgentReply::from_json(rpc_call(endpoint, message.to_json(), timeout));
    if (reply.id != message.id) {
        throw Error(ErrorCode::ProtocolError, "reply id " + std::to_string(reply.id) +
                                                  " does not echo " + std::to_string(message.id));
    }
    return reply;
}

RpcListener::RpcListener(Handler handler, const std::string& host, int port)
    : handler_(std::move(handler)), host_(host) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw Error(ErrorCode::Transport, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(fd_, 64) != 0) {
        const int err = errno;
        ::close(fd_);
        throw Error(ErrorCode::Transport, "listen " + host + ":" + std::to_string(port) + ": " +
                                              std::strerror(err));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::pipe2(wake_, O_CLOEXEC) != 0) {
        ::close(fd_);
        throw Error(ErrorCode::Transport, "pipe failed");
    }
    thread_ = std::thread([this] { accept_loop(); });
}

RpcListener::~RpcListener() {
    stop();
    if (fd_ >= 0) ::close(fd_);
    for (int& w : wake_) {
        if (w >= 0) ::close(w);
    }
}

std::string RpcListener::endpoint() const { return host_ + ":" + std::to_string(port_); }

void RpcListener::stop() {
    if (stopping_.exchange(true)) {
        if (thread_.joinable()) thread_.join();
        return;
    }
    const char c = 'x';
    [[maybe_unused]] auto n = ::write(wake_[1], &c, 1);
    if (thread_.joinable()) thread_.join();
}

void RpcListener::accept_loop() {
    while (!stopping_) {
        pollfd fds[2] = {{fd_, POLLIN, 0}, {wake_[0], POLLIN, 0}};
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[1].revents) break;
        if (!(fds[0].revents & POLLIN)) continue;
        Socket conn{::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC)};
        if (conn.fd < 0) continue;
        set_timeout(conn.fd, std::chrono::milliseconds(2000));
        try {
            while (auto body = read_frame(conn.fd)) {
                const json request = json::parse(*body, nullptr, false);
                json reply;
                if (request.is_discarded()) {
                    reply = AgentReply{0, false, "request is not JSON"}.to_json();
                } else {
                    try {
                        reply = handler_(request);
                    } catch (const std::exception& e) {
                        const std::uint64_t id =
                            request.is_object() && request.contains("id") &&
                                    request["id"].is_number_unsigned()
                                ? request["id"].get<std::uint64_t>()
                                : 0;
                        reply = AgentReply{id, false, e.what()}.to_json();
                    }
                }
                write_frame(conn.fd, canonical_dump(reply));
            }
        } catch (const Error&) {
            // peer went away or sent garbage; drop the connection
        }
    }
}

json dispatch_message(AgentRuntime& runtime, const json& request) {
    std::uint64_t id = 0;
    if (request.is_object() && request.contains("id") && request["id"].is_number_unsigned()) {
        id = request["id"].get<std::uint64_t>();
    } else {
        return AgentReply{0, false, "missing message id"}.to_json();
    }
    if (!request.contains("verb") || !request["verb"].is_string()) {
        return AgentReply{id, false, "missing verb"}.to_json();
    }
    Verb verb;
    try {
        verb = parse_verb(request["verb"].get<std::string>());
    } catch (const Error& e) {
        return AgentReply{id, false, e.what()}.to_json();
    }
    switch (verb) {
    case Verb::Play: runtime.play(ExecutionMode::Normal); break;
    case Verb::Debug: runtime.play(ExecutionMode::Debug); break;
    case Verb::Stop: runtime.stop(); break;
    }
    return AgentReply{id, true, std::string(to_string(verb))}.to_json();
}

AgentHost::AgentHost(AgentRuntime& runtime, const std::string& host, int port)
    : runtime_(runtime),
      listener_([this](const json& request) { return dispatch_message(runtime_, request); }, host,
                port) {}

} // namespace beestar
