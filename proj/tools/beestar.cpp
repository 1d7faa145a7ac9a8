// beestar: serve a graph, run a program, poke properties, message agents,
// tail the event stream. Every command except `serve` is a client of the
// HTTP routes.
//
// Exit codes: 0 success, 1 user error, 2 server or agent failure.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "beestar/client.hpp"
#include "beestar/deployer.hpp"
#include "beestar/engine.hpp"
#include "beestar/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(const beestar::Error& e) {
    if (const auto* api = dynamic_cast<const beestar::ApiError*>(&e)) {
        return api->status() >= 500 ? 2 : 1;
    }
    switch (e.code()) {
    case beestar::ErrorCode::Transport:
    case beestar::ErrorCode::AgentUnreachable:
    case beestar::ErrorCode::SpawnFailure:
    case beestar::ErrorCode::RegistrationFailure:
    case beestar::ErrorCode::RegistrationTimeout:
    case beestar::ErrorCode::ExecutorFailure: return 2;
    default: return 1;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_value_literal(const std::string& text) {
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) {
        throw UserError("value must be a JSON literal, e.g. '\"bulldozer\"', 42, '[1,2]' (got " +
                        text + ")");
    }
    return v;
}

int port_of(const std::string& address) {
    const std::string norm = beestar::normalize_address(address);
    return std::stoi(norm.substr(norm.rfind(':') + 1));
}

fs::path default_agent_binary() {
    std::error_code ec;
    const fs::path self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const fs::path sibling = self.parent_path() / "beestar-agent";
        if (fs::exists(sibling)) return sibling;
    }
    return "beestar-agent";
}

struct EngineFlags {
    std::string log;
    std::uint32_t max_chain_depth = 64;
    bool lax = false;

    beestar::EngineOptions options() const {
        beestar::EngineOptions o;
        o.max_chain_depth = max_chain_depth;
        if (!log.empty()) o.log_path = fs::path(log);
        return o;
    }
    beestar::Strictness strictness() const {
        return lax ? beestar::Strictness::Lax : beestar::Strictness::Strict;
    }
};

void print_summary(const beestar::ProgramSpec& doc) {
    std::cout << "loaded " << doc.entities.size() << " entities, " << doc.edges.size()
              << " edges\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"beestar: reactive graph blackboard"};
    app.require_subcommand(1);

    const char* env_server = std::getenv("BEESTAR_SERVER");
    std::string server = env_server && *env_server ? env_server : "http://127.0.0.1:7311";
    app.add_option("--server", server, "Server address (env BEESTAR_SERVER)");

    EngineFlags engine_flags;
    auto add_engine_flags = [&](CLI::App* cmd) {
        cmd->add_option("--log", engine_flags.log, "Append committed events to this NDJSON file");
        cmd->add_option("--max-chain-depth", engine_flags.max_chain_depth, "Agent trigger chain bound")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--lax", engine_flags.lax, "Accept edges naming missing properties");
    };

    // serve
    auto* serve = app.add_subcommand("serve", "Start the graph server");
    int port = beestar::kDefaultPort;
    std::string host = "127.0.0.1";
    std::string load_path, ui_path;
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--host", host, "Bind address (loopback by default)");
    serve->add_option("--load", load_path, "Program document to load at start");
    serve->add_option("--ui", ui_path, "Directory of static dashboard assets");
    add_engine_flags(serve);

    // run
    auto* run = app.add_subcommand("run", "Load a program and deploy its agents");
    std::string program_path, target_text = "local", manifest_dir = ".", base_image;
    std::string agent_binary;
    run->add_option("program", program_path, "Program document")->required();
    run->add_option("--target", target_text, "local | simulated | container")
        ->check(CLI::IsMember({"local", "simulated", "container"}));
    run->add_option("--manifest-dir", manifest_dir, "Where container manifests are written");
    run->add_option("--base-image", base_image, "Container base image");
    run->add_option("--agent-binary", agent_binary, "beestar-agent executable (local target)");
    add_engine_flags(run);

    // set
    auto* set = app.add_subcommand("set", "Assign a property");
    std::string set_entity, set_prop, set_value, set_cause = "external-set";
    set->add_option("entity", set_entity)->required();
    set->add_option("property", set_prop)->required();
    set->add_option("value", set_value, "JSON literal")->required();
    set->add_option("--cause", set_cause, "Cause recorded on the event");

    // msg
    auto* msg = app.add_subcommand("msg", "Send play/stop/debug to an agent");
    std::string msg_agent, msg_verb;
    msg->add_option("agent", msg_agent)->required();
    msg->add_option("verb", msg_verb)->required()->check(CLI::IsMember({"play", "stop", "debug"}));

    auto* ls = app.add_subcommand("ls", "List entities with their kinds");

    auto* show = app.add_subcommand("show", "Dump one entity");
    std::string show_entity;
    show->add_option("entity", show_entity)->required();

    auto* watch = app.add_subcommand("watch", "Stream events, one line each");
    std::uint64_t since = 0;
    std::size_t count = 0;
    bool heartbeats = false;
    watch->add_option("--since", since, "Replay events after this sequence number");
    watch->add_option("--count", count, "Exit after this many events");
    watch->add_flag("--heartbeats", heartbeats, "Print heartbeat lines too");

    auto* exp = app.add_subcommand("export", "Write the graph document to a file");
    std::string export_path;
    exp->add_option("file", export_path, "Output file ('-' for stdout)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*serve) {
            beestar::Engine engine(beestar::Graph(engine_flags.strictness()), engine_flags.options());
            if (!load_path.empty()) {
                const auto doc = beestar::ProgramSpec::parse(read_file(load_path));
                engine.load(doc, engine_flags.strictness());
                print_summary(doc);
            }
            beestar::ServerOptions opts;
            opts.host = host;
            opts.port = port;
            opts.strictness = engine_flags.strictness();
            if (!ui_path.empty()) opts.ui_root = fs::path(ui_path);
            beestar::Server srv(engine, opts);
            srv.start();
            std::cout << "serving on " << srv.address() << "/" << std::endl;
            wait_for_signal();
            srv.stop();
            return 0;
        }

        if (*run) {
            const auto doc = beestar::ProgramSpec::parse(read_file(program_path));
            const auto target = beestar::parse_target(target_text);

            // Reuse a running server; otherwise host one here.
            std::unique_ptr<beestar::Engine> engine;
            std::unique_ptr<beestar::Server> embedded;
            if (!beestar::ApiClient(server, std::chrono::milliseconds(1000)).healthy()) {
                engine = std::make_unique<beestar::Engine>(beestar::Graph(engine_flags.strictness()),
                                                           engine_flags.options());
                beestar::ServerOptions opts;
                opts.port = port_of(server);
                opts.strictness = engine_flags.strictness();
                embedded = std::make_unique<beestar::Server>(*engine, opts);
                embedded->start();
                server = embedded->address();
            }
            beestar::ApiClient(server).load(doc);
            print_summary(doc);

            beestar::DeployConfig config;
            config.server = beestar::normalize_address(server);
            config.agent_binary = agent_binary.empty() ? default_agent_binary() : fs::path(agent_binary);
            config.manifest_dir = manifest_dir;
            if (!base_image.empty()) config.base_image = base_image;
            beestar::Deployer deployer(config);

            const beestar::Graph graph = beestar::load_program(doc, beestar::Strictness::Lax);
            int failures = 0;
            for (const auto& e : doc.entities) {
                if (!graph.is_a(e.name, beestar::kind::Agent)) continue;
                try {
                    const auto h = deployer.deploy(e.name, target);
                    std::cout << "agent " << e.name << ": " << beestar::to_string(target);
                    if (h.pid) std::cout << " pid " << h.pid;
                    if (!h.endpoint.empty()) std::cout << " endpoint " << h.endpoint;
                    if (h.manifest) std::cout << " manifest " << h.manifest->string();
                    std::cout << "\n";
                } catch (const beestar::Error& err) {
                    std::cerr << "agent " << e.name << ": deploy failed: " << err.what() << "\n";
                    ++failures;
                }
            }
            std::cout << "dashboard: " << beestar::normalize_address(server) << "/" << std::endl;
            if (failures) {
                deployer.stop_all();
                return 2;
            }
            if (target == beestar::TargetKind::Container && !embedded) return 0;
            wait_for_signal();
            deployer.stop_all();
            if (embedded) embedded->stop();
            return 0;
        }

        beestar::ApiClient client(server);

        if (*set) {
            const json summary = client.set_property(set_entity, set_prop,
                                                     parse_value_literal(set_value), set_cause);
            std::cout << beestar::canonical_dump(summary) << "\n";
            return 0;
        }
        if (*msg) {
            std::cout << beestar::canonical_dump(client.message(msg_agent, msg_verb)) << "\n";
            return 0;
        }
        if (*ls) {
            for (const auto& e : client.entities()) {
                std::cout << e.at("name").get<std::string>() << "\t" << e.at("kind").get<std::string>()
                          << "\n";
            }
            return 0;
        }
        if (*show) {
            std::cout << client.entity(show_entity).dump(2) << "\n";
            return 0;
        }
        if (*watch) {
            std::size_t seen = 0;
            const bool ok = client.stream_events(since, [&](const json& line) {
                if (line.value("kind", "") == "heartbeat" && !heartbeats) return true;
                std::cout << beestar::canonical_dump(line) << std::endl;
                return !(count && ++seen >= count);
            });
            if (!ok) {
                std::cerr << "beestar: event stream from " << client.address() << " failed\n";
                return 2;
            }
            return 0;
        }
        if (*exp) {
            const std::string text = client.graph().to_json().dump(2) + "\n";
            if (export_path == "-") {
                std::cout << text;
            } else {
                std::ofstream out(export_path, std::ios::binary | std::ios::trunc);
                out << text;
                if (!out) throw UserError("cannot write " + export_path);
            }
            return 0;
        }
    } catch (const UserError& e) {
        std::cerr << "beestar: " << e.what() << "\n";
        return 1;
    } catch (const beestar::Error& e) {
        std::cerr << "beestar: " << beestar::error_code_name(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
