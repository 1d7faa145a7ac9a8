#pragma once

// One agent attached to a server over HTTP: runtime, message listener and
// registration. Used by the beestar-agent binary and the simulated target.

#include <atomic>
#include <memory>
#include <string>

#include "beestar/agent.hpp"
#include "beestar/client.hpp"
#include "beestar/executor.hpp"
#include "beestar/rpc.hpp"

namespace beestar {

class AgentService {
public:
    struct Options {
        std::string listen_host = "127.0.0.1";
        int listen_port = 0;
        SubprocessExecutor::Options executor;
    };

    AgentService(std::string server, std::string agent);
    AgentService(std::string server, std::string agent, Options options);
    ~AgentService();

    /// Checks the AgentEntity, mirrors "idle", opens the listener and
    /// registers. Throws Error(RegistrationFailure).
    void start();
    /// Liveness round trip; re-registers if the server forgot us. False
    /// when the server cannot be reached.
    bool heartbeat();
    /// Cancels any run, unregisters (best effort), closes the listener.
    void shutdown();

    const std::string& agent() const noexcept { return agent_; }
    std::string endpoint() const;
    AgentRuntime& runtime() noexcept { return *runtime_; }

private:
    std::string server_;
    std::string agent_;
    Options options_;
    HttpGraphPort port_;
    ApiClient control_;
    DispatchingExecutor executor_;
    std::unique_ptr<AgentRuntime> runtime_;
    std::unique_ptr<AgentHost> host_;
    bool started_ = false;
};

/// The agent process main loop: start, heartbeat every second until `stop`
/// is set, shut down. Returns the process exit code (0 on a requested stop,
/// 1 on registration failure, 2 after losing the server).
int run_agent(const std::string& server, const std::string& agent, const std::atomic<bool>& stop,
              AgentService::Options options = {});

} // namespace beestar
