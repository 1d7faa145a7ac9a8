#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <mutex>

#include "beestar/engine.hpp"
#include "beestar/error.hpp"
#include "fixtures.hpp"

using namespace beestar;
using beestar::testing::builtin;

namespace {

std::vector<std::pair<std::string, std::string>> touched(const WaveReport& r) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : r.events) out.emplace_back(e.entity, e.property);
    return out;
}

struct Recorder {
    std::mutex m;
    std::vector<ChangeEvent> events;
    std::vector<Notification> notifications;
    std::vector<Trigger> triggers;

    void attach(Engine& engine) {
        engine.subscribe(Scope::all(), [this](const ChangeEvent& e) {
            std::lock_guard l(m);
            events.push_back(e);
        });
        engine.subscribe_notifications(Scope::all(), [this](const Notification& n) {
            std::lock_guard l(m);
            notifications.push_back(n);
        });
        engine.set_trigger_sink([this](const Trigger& t) {
            std::lock_guard l(m);
            triggers.push_back(t);
        });
    }
};

// A "sets x" B and B "sets y" A through input entities: writing A.value
// re-stages itself.
Graph two_cycle() {
    Graph g;
    Builder app(g);
    auto a = app.input("A");
    auto b = app.input("B");
    a.sets("value", {b});
    b.sets("value", {a});
    return g;
}

std::string dump_state(const Graph& g) { return export_program(g).dump(); }

std::string versions(const Graph& g) {
    std::string out;
    for (const auto& e : g.entities()) {
        for (const auto& [n, p] : e.properties) out += e.name + "." + n + "=" + std::to_string(p.version) + ";";
    }
    return out;
}

} // namespace

TEST_CASE("set_property") {
    SUBCASE("prompt word triggers the watching agent") {
        Engine engine(beestar::testing::six_call());
        Recorder rec;
        rec.attach(engine);
        auto report = engine.set_property("prompt", "word", Value::string("bulldozer"));
        CHECK(report.status == WaveStatus::Committed);
        CHECK(touched(report) ==
              std::vector<std::pair<std::string, std::string>>{{"prompt", "word"}, {"CLIPAgent", "input"}});
        REQUIRE(report.triggers.size() == 1);
        CHECK(report.triggers[0].agent == "CLIPAgent");
        CHECK(report.triggers[0].input == Value::string("bulldozer"));
        CHECK(report.events[1].cause == Cause::watch_fill("prompt"));
        engine.flush();
        CHECK(rec.triggers.size() == 1);
        CHECK(rec.events.size() == 2);
        CHECK(engine.read([](const Graph& g) { return g.property("CLIPAgent", "input").value; }) ==
              Value::string("bulldozer"));
    }

    SUBCASE("entity with no edges") {
        Graph g;
        g.create_entity("E", "Entity", {{"x", ValueType::Number, Value()}});
        Engine engine(std::move(g));
        auto report = engine.set_property("E", "x", Value::number(1));
        CHECK(report.events.size() == 1);
        CHECK(report.triggers.empty());
        CHECK(report.events[0].version == 1);
        CHECK(report.events[0].old_value.is_null());
    }

    SUBCASE("sets cycle is rejected with the graph unchanged") {
        Engine engine(two_cycle());
        const std::string before = dump_state(engine.snapshot());
        const std::string vbefore = versions(engine.snapshot());
        auto report = engine.set_property("A", "value", Value::string("v"));
        CHECK(report.status == WaveStatus::CycleError);
        CHECK(report.events.empty());
        CHECK(dump_state(engine.snapshot()) == before);
        CHECK(versions(engine.snapshot()) == vbefore);
        CHECK(engine.event_log().empty());
    }

    SUBCASE("type mismatch") {
        Engine engine(beestar::testing::six_call());
        auto report = engine.set_property("prompt", "word", Value::number(42));
        CHECK(report.status == WaveStatus::TypeError);
        CHECK(engine.read([](const Graph& g) { return g.property("prompt", "word").version; }) == 0);
    }

    SUBCASE("type mismatch deep in the wave discards everything") {
        Graph g = load_program(beestar::testing::gallery_app());
        Engine engine(std::move(g));
        // CLIPAgent output sets Training Data.data (array); a string cannot land there.
        auto report = engine.apply_agent_output("CLIPAgent", Value::string("oops"));
        CHECK(report.status == WaveStatus::TypeError);
        CHECK(engine.read([](const Graph& g) { return g.property("CLIPAgent", "output").version; }) == 0);
    }

    SUBCASE("unknown targets") {
        Engine engine(beestar::testing::six_call());
        CHECK_THROWS_AS(engine.set_property("nobody", "word", Value()), Error);
        try {
            engine.set_property("prompt", "nosuch", Value());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownProperty);
        }
    }
}

TEST_CASE("apply_agent_output") {
    SUBCASE("output flows through sets edge to the gallery") {
        Engine engine(load_program(beestar::testing::gallery_app()));
        Recorder rec;
        rec.attach(engine);
        Value labeled = Value::array({Value::record({{"src", Value::link("file:img0.jpg")},
                                                     {"label", Value::string("bulldozer")},
                                                     {"positive", Value::boolean(true)}})});
        auto report = engine.apply_agent_output("CLIPAgent", labeled);
        CHECK(report.status == WaveStatus::Committed);
        CHECK(touched(report) == std::vector<std::pair<std::string, std::string>>{
                                     {"CLIPAgent", "output"}, {"Training Data", "data"}});
        CHECK(report.events[0].cause == Cause::agent_run());
        CHECK(report.events[1].cause == Cause::sets_edge("CLIPAgent"));
        REQUIRE(report.notifications.size() == 1);
        CHECK(report.notifications[0].display == "TrainDataGallery");
        engine.flush();
        CHECK(rec.notifications.size() == 1);
    }

    SUBCASE("agent without sets edges") {
        Engine engine(beestar::testing::six_call());
        auto report = engine.apply_agent_output("CLIPAgent", Value::string("X"));
        CHECK(touched(report) == std::vector<std::pair<std::string, std::string>>{{"CLIPAgent", "output"}});
    }

    SUBCASE("agent chain increments the hop count") {
        Graph g;
        Builder app(g);
        auto src = app.entity("src", {{"v", ValueType::Any, Value()}});
        auto a = app.entity("a", {{"x", ValueType::Any, Value()}});
        auto agent1 = app.agent("agent1", builtin("identity"));
        auto agent2 = app.agent("agent2", builtin("identity"));
        agent1.watch("v", {src});
        agent1.sets("x", {a});
        agent2.watch("x", {a});
        Engine engine(std::move(g));
        auto w0 = engine.set_property("src", "v", Value::number(1));
        REQUIRE(w0.triggers.size() == 1);
        CHECK(w0.triggers[0].hop == 1);
        auto w1 = engine.apply_agent_output("agent1", Value::number(1));
        REQUIRE(w1.triggers.size() == 1);
        CHECK(w1.triggers[0].agent == "agent2");
        CHECK(w1.triggers[0].hop == 2);
        CHECK(w1.triggers[0].chain == w0.triggers[0].chain);
    }

    SUBCASE("non-agent") {
        Engine engine(beestar::testing::six_call());
        CHECK_THROWS_AS(engine.apply_agent_output("prompt", Value()), Error);
    }
}

TEST_CASE("max chain depth stops mutual triggering") {
    Graph g;
    Builder app(g);
    auto x = app.entity("x", {{"a", ValueType::Any, Value()}});
    auto y = app.entity("y", {{"b", ValueType::Any, Value()}});
    auto ping = app.agent("ping", builtin("identity"));
    auto pong = app.agent("pong", builtin("identity"));
    ping.watch("a", {x});
    ping.sets("b", {y});
    pong.watch("b", {y});
    pong.sets("a", {x});
    EngineOptions opts;
    opts.max_chain_depth = 5;
    Engine engine(std::move(g), opts);

    auto report = engine.set_property("x", "a", Value::number(0));
    int runs = 0;
    while (!report.triggers.empty()) {
        REQUIRE(runs < 100);
        ++runs;
        report = engine.apply_agent_output(report.triggers[0].agent, Value::number(runs));
    }
    CHECK(runs == 5);
    CHECK(report.status == WaveStatus::ChainDepthExceeded);
    CHECK(report.suppressed.size() == 1);
    CHECK(engine.stats().triggers_suppressed == 1);
}

TEST_CASE("subscribe") {
    Engine engine(load_program(beestar::testing::gallery_app()));

    SUBCASE("all scope sees one delivery per change") {
        std::atomic<int> n{0};
        engine.subscribe(Scope::all(), [&](const ChangeEvent&) { ++n; });
        Graph g;
        engine.set_property("Training Data", "data", Value::array({}));
        engine.flush();
        CHECK(n == 1);
    }

    SUBCASE("property scope filters unrelated changes") {
        std::atomic<int> n{0};
        engine.subscribe(Scope::of("Training Data", "data"), [&](const ChangeEvent&) { ++n; });
        engine.set_property("Prompt", "word", Value::string("w"));
        engine.flush();
        CHECK(n == 0);
    }

    SUBCASE("two subscribers receive the same payload") {
        std::mutex m;
        std::vector<std::string> a, b;
        engine.subscribe(Scope::all(), [&](const ChangeEvent& e) {
            std::lock_guard l(m);
            a.push_back(e.to_json().dump());
        });
        engine.subscribe(Scope::all(), [&](const ChangeEvent& e) {
            std::lock_guard l(m);
            b.push_back(e.to_json().dump());
        });
        engine.set_property("Prompt", "word", Value::string("w"));
        engine.flush();
        CHECK(a.size() == 2);
        CHECK(a == b);
    }

    SUBCASE("unsubscribe stops delivery") {
        std::atomic<int> n{0};
        auto id = engine.subscribe(Scope::all(), [&](const ChangeEvent&) { ++n; });
        engine.unsubscribe(id);
        engine.set_property("Prompt", "word", Value::string("w"));
        engine.flush();
        CHECK(n == 0);
    }

    SUBCASE("unknown scope") {
        try {
            engine.subscribe(Scope::of("Nope"), [](const ChangeEvent&) {});
            FAIL("expected UnknownScope");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownScope);
        }
        CHECK_THROWS_AS(engine.subscribe(Scope::of("Prompt", "nope"), [](const ChangeEvent&) {}), Error);
    }

    SUBCASE("per-property delivery is version ordered") {
        std::mutex m;
        std::vector<std::uint64_t> seen;
        engine.subscribe(Scope::of("Prompt", "word"), [&](const ChangeEvent& e) {
            std::lock_guard l(m);
            seen.push_back(e.version);
        });
        for (int i = 0; i < 50; ++i) engine.set_property("Prompt", "word", Value::string(std::to_string(i)));
        engine.flush();
        REQUIRE(seen.size() == 50);
        for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i + 1);
    }
}

TEST_CASE("event_log") {
    Engine engine(beestar::testing::six_call());
    CHECK(engine.event_log().empty());

    const Graph initial = engine.snapshot();
    engine.set_property("CLIPInputEntity", "value", Value::string("bulldozer"));
    engine.apply_agent_output("CLIPAgent", Value::string("BULLDOZER"));
    engine.set_property("CLIPAgent", "status", Value::string("idle"), Cause::agent_status());

    const auto log = engine.event_log();
    CHECK(log.size() == 5); // value, word, input, output, status
    CHECK(engine.event_log(engine.head()).empty());
    CHECK(engine.event_log(log[2].seq).size() == 2);

    Graph replayed = initial;
    replay(replayed, log);
    CHECK(dump_state(replayed) == dump_state(engine.snapshot()));
    CHECK(versions(replayed) == versions(engine.snapshot()));

    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i - 1].seq < log[i].seq);
    for (const auto& e : log) CHECK(ChangeEvent::from_json(e.to_json()) == e);
}

TEST_CASE("durable event log file") {
    const auto path = std::filesystem::temp_directory_path() / "beestar_propagation_test.ndjson";
    std::filesystem::remove(path);
    {
        EngineOptions opts;
        opts.log_path = path;
        Engine engine(beestar::testing::six_call(), opts);
        engine.set_property("prompt", "word", Value::string("a"));
        engine.set_property("prompt", "word", Value::string("b"));
        CHECK(read_event_log(path) == engine.event_log());
    }
    std::filesystem::remove(path);
}

TEST_CASE("cycle atomicity on constructed cycles") {
    // Rings of n input entities that set each other's value, n = 1..20.
    for (int n = 1; n <= 20; ++n) {
        Graph g;
        Builder app(g);
        std::vector<EntityRef> ring;
        for (int i = 0; i < n; ++i) ring.push_back(app.input("in" + std::to_string(i)));
        for (int i = 0; i < n; ++i) ring[i].sets("value", {ring[(i + 1) % n]});
        Engine engine(std::move(g));
        const auto before = versions(engine.snapshot()) + dump_state(engine.snapshot());
        auto r = engine.set_property("in0", "value", Value::number(n));
        CAPTURE(n);
        CHECK(r.status == WaveStatus::CycleError);
        CHECK(versions(engine.snapshot()) + dump_state(engine.snapshot()) == before);
    }
}

TEST_CASE("display keeps its source after the agent is removed") {
    Engine engine(load_program(beestar::testing::gallery_app()));
    Value data = Value::array({Value::string("x")});
    engine.apply_agent_output("CLIPAgent", data);
    engine.remove_entity("CLIPAgent");
    CHECK(engine.read([](const Graph& g) { return g.property("Training Data", "data").value; }) == data);
    CHECK(engine.read([](const Graph& g) { return g.watchers_of("Training Data", "data").size(); }) == 1);
}

TEST_CASE("structural deltas share the commit sequence") {
    Engine engine(beestar::testing::six_call());
    std::mutex m;
    std::vector<GraphDelta> deltas;
    engine.subscribe_graph([&](const GraphDelta& d) {
        std::lock_guard l(m);
        deltas.push_back(d);
    });
    engine.set_property("prompt", "word", Value::string("a"));
    engine.create_entity("Extra", "DisplayEntity");
    engine.add_edge("Extra", "prompt", "watches word");
    engine.flush();
    REQUIRE(deltas.size() == 2);
    CHECK(deltas[0].op == "entity_created");
    CHECK(deltas[0].seq == 3);
    CHECK(deltas[1].seq == 4);
    CHECK(engine.head() == 4);

    auto r = engine.set_property("prompt", "word", Value::string("b"));
    REQUIRE(r.notifications.size() == 1);
    CHECK(r.notifications[0].display == "Extra");
}
