#include <doctest.h>

#include "harness.hpp"

using namespace beestar;
using namespace beestar::testing;

TEST_CASE("oracle matches hand-computed waves") {
    Graph g;
    g.create_entity("in", "InputEntity");
    g.create_entity("p", "Entity", {{"x", ValueType::String, Value()}});
    g.create_entity("a", "AgentEntity",
                    {{"source code", ValueType::Code, Value::code("builtin", "main", "identity")}});
    g.create_entity("q", "Entity", {{"y", ValueType::String, Value()}});
    g.add_edge("in", "p", "sets x");
    g.add_edge("a", "p", "watches x");
    g.add_edge("a", "q", "sets y");
    Oracle o(export_program(g));

    CHECK(o.set("in", "value", Value::string("hi")));
    const auto& s = o.state();
    CHECK(s.at({"p", "x"}).value == Value::string("hi"));
    CHECK(s.at({"p", "x"}).version == 1);
    CHECK(s.at({"a", "input"}).value == Value::string("hi"));
    CHECK(s.at({"a", "output"}).value == Value::string("hi"));
    CHECK(s.at({"q", "y"}).value == Value::string("hi"));
    CHECK(s.at({"q", "y"}).version == 1);

    // wrong type for p.x: nothing changes
    CHECK_FALSE(o.set("in", "value", Value::number(3)));
    CHECK(o.state().at({"in", "value"}).version == 1);
}

TEST_CASE("oracle rejects a diamond onto one key") {
    Graph g;
    g.create_entity("src", "InputEntity");
    g.create_entity("l", "InputEntity");
    g.create_entity("r", "InputEntity");
    g.create_entity("p", "Entity", {{"x", ValueType::Any, Value()}});
    g.add_edge("src", "l", "sets value");
    g.add_edge("src", "r", "sets value");
    g.add_edge("l", "p", "sets x");
    g.add_edge("r", "p", "sets x");
    Oracle o(export_program(g));
    CHECK_FALSE(o.set("src", "value", Value::number(1)));

    Engine engine(load_program(export_program(g)));
    CHECK(engine.set_property("src", "value", Value::number(1)).status == WaveStatus::CycleError);
}

TEST_CASE("engine final state equals the oracle on random acyclic graphs") {
    int committed_sets = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        const OracleCase c = random_acyclic_case(seed);
        CAPTURE(seed);
        CAPTURE(c.doc.dump());
        const auto expected = oracle_final_state(c);
        const auto actual = engine_final_state(c);
        REQUIRE(expected.size() == actual.size());
        for (const auto& [k, slot] : expected) {
            CAPTURE(k.first);
            CAPTURE(k.second);
            REQUIRE(actual.contains(k));
            CHECK(actual.at(k).value.canonical() == slot.value.canonical());
            CHECK(actual.at(k).version == slot.version);
            if (slot.version > 0) ++committed_sets;
        }
    }
    // the generator must exercise propagation, not just rejected sets
    CHECK(committed_sets > 300);
}
