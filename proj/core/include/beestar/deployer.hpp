#pragma once

// Launches agents against a running server: as local child processes, as
// in-process agents speaking the same protocol, or as container manifests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "beestar/graph.hpp"

namespace beestar {

enum class TargetKind { Local, Simulated, Container };

std::string_view to_string(TargetKind t) noexcept;
/// Throws Error(ValidationError).
TargetKind parse_target(std::string_view text);

struct DeployConfig {
    std::string server = "http://127.0.0.1:7311";
    /// beestar-agent executable for the local target.
    std::filesystem::path agent_binary = "beestar-agent";
    std::filesystem::path manifest_dir = ".";
    std::string base_image = "beestar/agent-base:latest";
    std::string install_command = "pip install";
    std::string agent_command = "beestar-agent";
    int agent_port = 7400;
    std::chrono::milliseconds registration_timeout{10000};
    std::chrono::milliseconds stop_grace{2000};
};

struct Liveness {
    enum class State { Running, Exited, Unknown };
    State state = State::Unknown;
    int code = 0; // exit code when Exited (128+signal for a kill)

    static Liveness running() { return {State::Running, 0}; }
    static Liveness exited(int code) { return {State::Exited, code}; }
    static Liveness unknown() { return {State::Unknown, 0}; }

    std::string str() const;
    bool operator==(const Liveness&) const = default;
};

/// Plain value; the deployment itself lives in the Deployer.
struct AgentHandle {
    std::uint64_t id = 0;
    std::string agent;
    TargetKind target = TargetKind::Local;
    std::string endpoint;                         // empty for container
    std::optional<std::filesystem::path> manifest; // container only
    int pid = 0;                                  // local only
};

/// Manifest text for `agent` in `graph`. Throws Error(UnknownAgent).
std::string generate_manifest(const Graph& graph, const std::string& agent,
                              const DeployConfig& config);

class Deployer {
public:
    explicit Deployer(DeployConfig config);
    /// Stops everything still deployed.
    ~Deployer();

    Deployer(const Deployer&) = delete;
    Deployer& operator=(const Deployer&) = delete;

    const DeployConfig& config() const noexcept { return config_; }

    /// Throws UnknownAgent, SpawnFailure, RegistrationTimeout,
    /// RegistrationFailure.
    AgentHandle deploy(const std::string& agent, TargetKind target);
    /// Non-blocking probe.
    Liveness status(const AgentHandle& handle);
    /// Stop verb, then terminate with a grace period. Idempotent.
    void stop(const AgentHandle& handle);
    void stop_all();

    /// Fetches the graph from the server and renders the manifest.
    std::string generate_manifest(const std::string& agent);

private:
    struct Deployment;

    DeployConfig config_;
    std::mutex mutex_;
    std::map<std::uint64_t, std::shared_ptr<Deployment>> deployments_;
    std::uint64_t next_id_ = 1;
};

} // namespace beestar
