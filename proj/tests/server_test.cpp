#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "beestar/agent_service.hpp"
#include "beestar/client.hpp"
#include "beestar/server.hpp"
#include "fixtures.hpp"
#include "harness.hpp"

using namespace beestar;
using namespace beestar::testing;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

struct Fixture {
    Engine engine;
    Server server;
    ApiClient client;

    explicit Fixture(ServerOptions opts = quiet())
        : server(engine, with_port0(opts)), client((server.start(), server.address())) {}

    static ServerOptions quiet() { return ServerOptions{}; }
    static ServerOptions with_port0(ServerOptions o) {
        o.port = 0;
        return o;
    }
};

int status_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ApiError& e) {
        return e.status();
    }
    return 200;
}

// Collects `n` non-heartbeat lines from the stream.
std::vector<json> collect(const std::string& address, std::uint64_t since, std::size_t n,
                          bool keep_heartbeats = false) {
    ApiClient c(address);
    std::vector<json> lines;
    if (n == 0) return lines;
    c.stream_events(since, [&](const json& line) {
        if (!keep_heartbeats && line.at("kind") == "heartbeat") return true;
        lines.push_back(line);
        return lines.size() < n;
    });
    return lines;
}

std::vector<json> log_lines(const Engine& engine, std::uint64_t since = 0) {
    std::vector<json> out;
    for (const auto& ev : engine.event_log(since)) out.push_back(ev.to_json());
    return out;
}

std::vector<json> payloads(const std::vector<json>& lines) {
    std::vector<json> out;
    for (const auto& l : lines) {
        if (l.at("kind") == "property_changed" || l.at("kind") == "agent_status") {
            out.push_back(l.at("payload"));
        }
    }
    return out;
}

} // namespace

TEST_CASE("health and graph round trip") {
    Fixture f;
    CHECK(f.client.healthy());
    f.client.load(ProgramSpec::parse(six_call_json()));
    const ProgramSpec back = f.client.graph();
    CHECK(canonical_dump(back.to_json()) == canonical_dump(f.engine.export_program().to_json()));
    CHECK(f.client.entities().size() == 3);

    const json agent = f.client.entity("CLIPAgent");
    CHECK(agent.at("kind") == "AgentEntity");
    CHECK(agent.at("properties").contains("source code"));
}

TEST_CASE("entity and edge routes") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));

    const json created = f.client.post(
        "/entities", {{"name", "board"},
                      {"kind", "DisplayEntity"},
                      {"properties", {{"caption", {{"type", "string"}, {"value", "hi"}}}}}});
    CHECK(created.at("name") == "board");
    CHECK(created.at("properties").at("caption").at("value") == "hi");
    CHECK(f.engine.read([](const Graph& g) { return g.contains("board"); }));

    const json edge =
        f.client.post("/edges", {{"from", "board"}, {"to", "prompt"}, {"label", "watches word"}});
    const auto id = edge.at("id").get<std::uint64_t>();
    CHECK(edge.at("label") == "watches word");

    CHECK(status_of([&] { f.client.post("/edges", {{"from", "board"}, {"to", "prompt"},
                                                   {"label", "watches word"}}); }) == 409);
    f.client.del("/edges/" + std::to_string(id));
    CHECK(status_of([&] { f.client.del("/edges/" + std::to_string(id)); }) == 404);

    f.client.del("/entities/board");
    CHECK(status_of([&] { f.client.entity("board"); }) == 404);
    CHECK(status_of([&] { f.client.post("/entities", {{"name", "prompt"}, {"kind", "Entity"}}); }) ==
          409);
    CHECK(status_of([&] { f.client.post("/entities", {{"name", "x"}, {"kind", "NoSuchKind"}}); }) ==
          422);
}

TEST_CASE("property writes and error mapping") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));

    const json report = f.client.set_property("prompt", "word", "bulldozer");
    CHECK(report.at("status") == "committed");
    CHECK(report.at("triggers") == json::array({"CLIPAgent"}));
    CHECK(report.at("events") == 2);

    CHECK(status_of([&] { f.client.set_property("prompt", "word", 42); }) == 422);
    CHECK(status_of([&] { f.client.set_property("nope", "word", "x"); }) == 404);
    CHECK(status_of([&] { f.client.set_property("prompt", "nope", "x"); }) == 404);
    CHECK(status_of([&] { f.client.set_property("prompt", "word", "x", "sets-edge from x"); }) ==
          422);
    CHECK(status_of([&] { f.client.message("CLIPAgent", "play"); }) == 502);
    CHECK(status_of([&] { f.client.message("nobody", "play"); }) == 404);
    CHECK(status_of([&] { f.client.message("CLIPAgent", "dance"); }) == 422);
    CHECK(status_of([&] { f.client.post("/graph", json("not a program")); }) == 422);

    // a failed write leaves state alone
    const auto word = f.engine.read([](const Graph& g) { return g.property("prompt", "word").value; });
    CHECK(word == Value::string("bulldozer"));
}

TEST_CASE("non-JSON body is a 400") {
    Fixture f;
    httplib::Client raw("127.0.0.1", f.server.port());
    auto res = raw.Post("/graph", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body).contains("error"));
}

TEST_CASE("cycle over HTTP is 409 and atomic") {
    Fixture f;
    // two input widgets writing each other's value: a revisit within one wave
    Graph c;
    Builder app(c);
    auto i1 = app.input("i1");
    auto i2 = app.input("i2");
    i1.sets("value", {i2});
    i2.sets("value", {i1});
    f.client.load(export_program(c));
    const std::string pre = canonical_dump(f.engine.export_program().to_json());
    const auto pre_log = f.engine.event_log().size();
    CHECK(status_of([&] { f.client.set_property("i1", "value", "go"); }) == 409);
    CHECK(canonical_dump(f.engine.export_program().to_json()) == pre);
    CHECK(f.engine.event_log().size() == pre_log);
}

TEST_CASE("stream replay equals the committed log") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));
    for (const char* w : {"bulldozer", "crane", "excavator"}) f.client.set_property("prompt", "word", w);
    f.engine.flush();

    const auto expected = log_lines(f.engine);
    const auto lines = collect(f.server.address(), 0, expected.size());
    CHECK(payloads(lines) == expected);

    // seq strictly increasing and equal to the payload's seq
    std::uint64_t last = 0;
    for (const auto& l : lines) {
        CHECK(l.at("seq").get<std::uint64_t>() > last);
        last = l.at("seq").get<std::uint64_t>();
        CHECK(l.at("payload").at("seq") == l.at("seq"));
    }

    // a cursor skips what came before it
    const auto mid = expected[1].at("seq").get<std::uint64_t>();
    const auto tail = collect(f.server.address(), mid, expected.size() - 2);
    CHECK(payloads(tail) == log_lines(f.engine, mid));
}

TEST_CASE("replay then live, two clients see the same sequence") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));
    f.client.set_property("prompt", "word", "one");
    f.engine.flush();

    constexpr std::size_t kLive = 20;
    const std::size_t total = f.engine.event_log().size() + kLive * 2;
    std::vector<json> a, b;
    std::thread ta([&] { a = collect(f.server.address(), 0, total); });
    std::thread tb([&] { b = collect(f.server.address(), 0, total); });
    std::this_thread::sleep_for(200ms);
    for (std::size_t i = 0; i < kLive; ++i) {
        f.client.set_property("prompt", "word", "w" + std::to_string(i));
    }
    ta.join();
    tb.join();
    CHECK(a.size() == total);
    CHECK(a == b);
    CHECK(payloads(a) == log_lines(f.engine));
}

TEST_CASE("cursor beyond head starts live") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));
    f.client.set_property("prompt", "word", "old");
    f.engine.flush();
    std::vector<json> got;
    std::thread t([&] { got = collect(f.server.address(), 1000000, 2); });
    std::this_thread::sleep_for(200ms);
    f.client.set_property("prompt", "word", "new");
    t.join();
    REQUIRE(got.size() == 2);
    CHECK(got[0].at("payload").at("new") == "new");
}

TEST_CASE("idle stream carries heartbeats only") {
    ServerOptions o;
    o.heartbeat = 100ms;
    Fixture f(o);
    f.client.load(ProgramSpec::parse(six_call_json()));
    const auto head = f.engine.head();
    const auto lines = collect(f.server.address(), head, 3, true);
    REQUIRE(lines.size() == 3);
    for (const auto& l : lines) {
        CHECK(l.at("kind") == "heartbeat");
        CHECK(l.at("payload") == json::object());
    }
}

TEST_CASE("a stalled client does not block commits") {
    ServerOptions o;
    o.client_buffer = 16;
    Fixture f(o);
    f.client.load(ProgramSpec::parse(six_call_json()));

    // raw socket that requests the stream and never reads
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(f.server.port()));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    const std::string req = "GET /events?since=0 HTTP/1.1\r\nHost: x\r\n\r\n";
    REQUIRE(::write(fd, req.data(), req.size()) == static_cast<ssize_t>(req.size()));

    const std::string big(4096, 'x');
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 500; ++i) f.client.set_property("prompt", "word", big + std::to_string(i));
    f.engine.flush();
    CHECK(std::chrono::steady_clock::now() - t0 < 20s);
    CHECK(f.engine.event_log().size() >= 1000);
    ::close(fd);

    // other clients still get everything
    const auto all = collect(f.server.address(), 0, f.engine.event_log().size());
    CHECK(payloads(all) == log_lines(f.engine));
}

TEST_CASE("HTTP and direct engine calls reach the same state") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        CAPTURE(seed);
        const OracleCase c = random_acyclic_case(seed);

        Engine direct;
        direct.load(c.doc);
        for (const auto& s : c.sets) {
            try {
                direct.set_property(s.entity, s.property, s.value);
            } catch (const Error&) {
            }
        }

        Fixture f;
        f.client.load(c.doc);
        for (const auto& s : c.sets) {
            try {
                f.client.set_property(s.entity, s.property, s.value.to_json());
            } catch (const ApiError&) {
            }
        }
        CHECK(canonical_dump(f.engine.export_program().to_json()) ==
              canonical_dump(direct.export_program().to_json()));
        CHECK(log_lines(f.engine) == log_lines(direct));
    }
}

TEST_CASE("registry routes") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));
    CHECK(status_of([&] { f.client.register_agent("prompt", "127.0.0.1:1"); }) == 404);
    f.client.register_agent("CLIPAgent", "127.0.0.1:1");
    CHECK(f.client.agents().size() == 1);
    CHECK(f.client.heartbeat("CLIPAgent"));
    // registered but nobody listening
    CHECK(status_of([&] { f.client.message("CLIPAgent", "play"); }) == 502);
    f.client.unregister_agent("CLIPAgent");
    CHECK_FALSE(f.client.heartbeat("CLIPAgent"));
    CHECK(f.client.agents().empty());
}

TEST_CASE("in-process agent over the real protocol") {
    Fixture f;
    f.client.load(ProgramSpec::parse(six_call_json()));
    AgentService svc(f.server.address(), "CLIPAgent");
    svc.start();
    REQUIRE(f.client.agents().size() == 1);

    f.client.set_property("prompt", "word", "bulldozer");
    const auto deadline = std::chrono::steady_clock::now() + 10s;
    Value out;
    while (std::chrono::steady_clock::now() < deadline) {
        out = f.engine.read([](const Graph& g) { return g.property("CLIPAgent", "output").value; });
        const auto st = f.engine.read([](const Graph& g) { return g.property("CLIPAgent", "status").value; });
        if (out == Value::string("BULLDOZER") && st == Value::string("idle")) break;
        std::this_thread::sleep_for(20ms);
    }
    CHECK(out == Value::string("BULLDOZER"));

    const json reply = f.client.message("CLIPAgent", "play");
    CHECK(reply.at("status") == "ok");
    svc.shutdown();
    CHECK(f.client.agents().empty());
}
