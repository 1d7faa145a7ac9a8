#include "beestar/deployer.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "beestar/agent_service.hpp"
#include "beestar/client.hpp"
#include "beestar/error.hpp"
#include "beestar/process.hpp"
#include "beestar/program.hpp"
#include "beestar/rpc.hpp"

namespace beestar {

std::string_view to_string(TargetKind t) noexcept {
    switch (t) {
    case TargetKind::Local: return "local";
    case TargetKind::Simulated: return "simulated";
    case TargetKind::Container: return "container";
    }
    return "local";
}

TargetKind parse_target(std::string_view text) {
    if (text == "local") return TargetKind::Local;
    if (text == "simulated") return TargetKind::Simulated;
    if (text == "container") return TargetKind::Container;
    throw Error(ErrorCode::ValidationError,
                "unknown target '" + std::string(text) + "' (local, simulated, container)");
}

std::string Liveness::str() const {
    switch (state) {
    case State::Running: return "running";
    case State::Exited: return "exited(" + std::to_string(code) + ")";
    case State::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

std::string slug(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!out.empty() && out.back() != '-') {
            out += '-';
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "agent" : out;
}

std::string shell_word(const std::string& s) {
    const bool plain = !s.empty() && s.find_first_not_of(
                                         "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                                         "0123456789-_.=/:@+") == std::string::npos;
    if (plain) return s;
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

std::string yaml_string(const std::string& s) { return nlohmann::json(s).dump(); }

} // namespace

std::string generate_manifest(const Graph& graph, const std::string& agent,
                              const DeployConfig& config) {
    const Entity* e = graph.find(agent);
    if (!e || !graph.is_a(agent, kind::Agent)) {
        throw Error(ErrorCode::UnknownAgent, "no AgentEntity named '" + agent + "'");
    }
    std::vector<std::string> requirements;
    const Value& reqs = e->find(prop::Requirements)->value;
    if (reqs.type() == ValueType::Array) {
        for (const Value& r : reqs.as_array()) {
            requirements.push_back(r.type() == ValueType::String ? r.as_string() : r.canonical());
        }
    }

    std::ostringstream out;
    out << "# beestar agent manifest\n"
        << "apiVersion: v1\n"
        << "kind: Pod\n"
        << "metadata:\n"
        << "  name: beestar-" << slug(agent) << "\n"
        << "  labels:\n"
        << "    app: beestar\n"
        << "    beestar-agent: " << yaml_string(agent) << "\n"
        << "spec:\n"
        << "  restartPolicy: Never\n"
        << "  containers:\n"
        << "    - name: agent\n"
        << "      image: " << config.base_image << "\n"
        << "      command: [\"/bin/sh\", \"-c\"]\n"
        << "      args:\n"
        << "        - |\n";
    for (const auto& r : requirements) {
        out << "          " << config.install_command << " " << shell_word(r) << "\n";
    }
    out << "          exec " << config.agent_command << "\n"
        << "      env:\n"
        << "        - name: BEESTAR_SERVER\n"
        << "          value: " << yaml_string(config.server) << "\n"
        << "        - name: BEESTAR_AGENT\n"
        << "          value: " << yaml_string(agent) << "\n"
        << "        - name: BEESTAR_AGENT_LISTEN\n"
        << "          value: " << yaml_string("0.0.0.0:" + std::to_string(config.agent_port)) << "\n"
        << "      ports:\n"
        << "        - containerPort: " << config.agent_port << "\n"
        << "          protocol: TCP\n";
    return out.str();
}

struct Deployer::Deployment {
    std::mutex mutex;
    AgentHandle handle;
    std::optional<Process> process;
    std::unique_ptr<AgentService> service;
    std::optional<Liveness> final;
};

Deployer::Deployer(DeployConfig config) : config_(std::move(config)) {}

Deployer::~Deployer() { stop_all(); }

std::string Deployer::generate_manifest(const std::string& agent) {
    ApiClient client(config_.server);
    const Graph g = load_program(client.graph(), Strictness::Lax);
    return beestar::generate_manifest(g, agent, config_);
}

AgentHandle Deployer::deploy(const std::string& agent, TargetKind target) {
    auto d = std::make_shared<Deployment>();
    d->handle.agent = agent;
    d->handle.target = target;

    ApiClient client(config_.server);
    if (target != TargetKind::Container) {
        // fail before starting anything for an unknown agent
        const Graph g = load_program(client.graph(), Strictness::Lax);
        if (!g.contains(agent) || !g.is_a(agent, kind::Agent)) {
            throw Error(ErrorCode::UnknownAgent, "no AgentEntity named '" + agent + "'");
        }
    }
    switch (target) {
    case TargetKind::Container: {
        const std::string text = generate_manifest(agent);
        std::filesystem::create_directories(config_.manifest_dir);
        const auto path = config_.manifest_dir / (slug(agent) + ".yaml");
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        file << text;
        if (!file) throw Error(ErrorCode::SpawnFailure, "cannot write " + path.string());
        d->handle.manifest = path;
        break;
    }
    case TargetKind::Simulated: {
        d->service = std::make_unique<AgentService>(config_.server, agent);
        d->service->start();
        d->handle.endpoint = d->service->endpoint();
        break;
    }
    case TargetKind::Local: {
        try {
            client.unregister_agent(agent); // a stale endpoint must not count as ours
        } catch (const Error&) {
        }
        SpawnOptions opts;
        opts.argv = {config_.agent_binary.string()};
        opts.env = {{"BEESTAR_SERVER", config_.server}, {"BEESTAR_AGENT", agent}};
        opts.pipe_stdin = false;
        opts.pipe_stdout = false;
        opts.pipe_stderr = false;
        d->process = Process::spawn(opts);
        d->handle.pid = d->process->pid();

        const auto deadline = std::chrono::steady_clock::now() + config_.registration_timeout;
        for (;;) {
            if (auto st = d->process->poll()) {
                throw Error(ErrorCode::RegistrationFailure,
                            agent + ": agent process exited with status " +
                                std::to_string(st->shell_code()) + " before registering");
            }
            std::optional<std::string> endpoint;
            try {
                for (const auto& entry : client.agents()) {
                    if (entry.at("name") == agent) endpoint = entry.at("endpoint").get<std::string>();
                }
            } catch (const Error&) {
            }
            if (endpoint) {
                d->handle.endpoint = *endpoint;
                break;
            }
            if (std::chrono::steady_clock::now() >= deadline) {
                d->process->terminate(std::chrono::milliseconds(500));
                throw Error(ErrorCode::RegistrationTimeout,
                            agent + ": no registration within " +
                                std::to_string(config_.registration_timeout.count()) + " ms");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(25));
        }
        break;
    }
    }

    std::lock_guard lock(mutex_);
    d->handle.id = next_id_++;
    deployments_[d->handle.id] = d;
    return d->handle;
}

Liveness Deployer::status(const AgentHandle& handle) {
    std::shared_ptr<Deployment> d;
    {
        std::lock_guard lock(mutex_);
        auto it = deployments_.find(handle.id);
        if (it == deployments_.end()) return Liveness::unknown();
        d = it->second;
    }
    std::lock_guard lock(d->mutex);
    if (d->final) return *d->final;
    switch (d->handle.target) {
    case TargetKind::Container: return Liveness::unknown();
    case TargetKind::Simulated: return Liveness::running();
    case TargetKind::Local:
        if (auto st = d->process->poll()) return Liveness::exited(st->shell_code());
        return Liveness::running();
    }
    return Liveness::unknown();
}

void Deployer::stop(const AgentHandle& handle) {
    std::shared_ptr<Deployment> d;
    {
        std::lock_guard lock(mutex_);
        auto it = deployments_.find(handle.id);
        if (it == deployments_.end()) return;
        d = it->second;
    }
    std::lock_guard lock(d->mutex);
    if (d->final) return;
    switch (d->handle.target) {
    case TargetKind::Container: d->final = Liveness::unknown(); break;
    case TargetKind::Simulated:
        d->service->shutdown();
        d->service.reset();
        d->final = Liveness::exited(0);
        break;
    case TargetKind::Local: {
        if (!d->process->poll() && !d->handle.endpoint.empty()) {
            try {
                send_message(d->handle.endpoint, AgentMessage{0, Verb::Stop, "deployer"},
                             std::chrono::milliseconds(500));
            } catch (const Error&) {
                // already unreachable; termination below still applies
            }
        }
        const ExitStatus st = d->process->terminate(config_.stop_grace);
        d->final = Liveness::exited(st.shell_code());
        break;
    }
    }
}

void Deployer::stop_all() {
    std::vector<AgentHandle> handles;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, d] : deployments_) handles.push_back(d->handle);
    }
    for (const auto& h : handles) stop(h);
}

} // namespace beestar
