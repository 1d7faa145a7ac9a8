#include <benchmark/benchmark.h>

#include <string>

#include "beestar/builder.hpp"
#include "beestar/client.hpp"
#include "beestar/engine.hpp"
#include "beestar/executor.hpp"
#include "beestar/server.hpp"

using namespace beestar;

namespace {

// input -> e0.x -> ... -> e{n-1}.x through input widgets
Graph chain(int n) {
    Graph g;
    Builder app(g);
    auto prev = app.input("in");
    for (int i = 0; i < n; ++i) {
        auto next = app.input("c" + std::to_string(i));
        prev.sets("value", {next});
        prev = next;
    }
    return g;
}

// one input setting `n` entities, each watched by a display
Graph fan(int n) {
    Graph g;
    Builder app(g);
    auto in = app.input("in");
    for (int i = 0; i < n; ++i) {
        auto e = app.entity("e" + std::to_string(i), {{"x", ValueType::String, Value()}});
        in.sets("x", {e});
        app.gallery("g" + std::to_string(i)).watch("x", {e});
    }
    return g;
}

void BM_WaveChain(benchmark::State& state) {
    Engine engine(chain(static_cast<int>(state.range(0))));
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto r = engine.set_property("in", "value", Value::string(std::to_string(i++)));
        benchmark::DoNotOptimize(r);
    }
    engine.flush();
    state.SetItemsProcessed(state.iterations() * (state.range(0) + 1));
}
BENCHMARK(BM_WaveChain)->Arg(1)->Arg(8)->Arg(64);

void BM_WaveFanOut(benchmark::State& state) {
    Engine engine(fan(static_cast<int>(state.range(0))));
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto r = engine.set_property("in", "value", Value::string(std::to_string(i++)));
        benchmark::DoNotOptimize(r);
    }
    engine.flush();
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WaveFanOut)->Arg(4)->Arg(32)->Arg(256);

Value label_output(int n) {
    BuiltinExecutor exec;
    CancelToken token;
    auto r = exec.run(Code{"builtin", "main", "label:" + std::to_string(n)}, Value::string("crane"),
                      ExecutionMode::Normal, token);
    return *r.output;
}

void BM_CanonicalEncode(benchmark::State& state) {
    const Value v = label_output(static_cast<int>(state.range(0)));
    std::size_t bytes = 0;
    for (auto _ : state) {
        const std::string s = v.canonical();
        bytes += s.size();
        benchmark::DoNotOptimize(s.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_CanonicalEncode)->Arg(10)->Arg(4000);

void BM_DecodeTyped(benchmark::State& state) {
    const auto doc = label_output(static_cast<int>(state.range(0))).to_json();
    for (auto _ : state) {
        Value v = Value::from_json(doc, ValueType::Array);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_DecodeTyped)->Arg(10)->Arg(4000);

void BM_LabelBuiltin(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(label_output(static_cast<int>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LabelBuiltin)->Arg(4000);

void BM_HttpSetProperty(benchmark::State& state) {
    Engine engine(fan(4));
    ServerOptions o;
    o.port = 0;
    Server server(engine, o);
    server.start();
    ApiClient client(server.address());
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto r = client.set_property("in", "value", std::to_string(i++));
        benchmark::DoNotOptimize(r);
    }
    server.stop();
}
BENCHMARK(BM_HttpSetProperty)->UseRealTime();

} // namespace

BENCHMARK_MAIN();
