// beestar-agent: one agent process. Configured through the environment:
//   BEESTAR_SERVER        server address (default http://127.0.0.1:7311)
//   BEESTAR_AGENT         AgentEntity name (required)
//   BEESTAR_AGENT_LISTEN  host:port for the message listener (default
//                         127.0.0.1 on an ephemeral port)

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>

#include "beestar/agent_service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

} // namespace

int main(int argc, char** argv) {
    std::string server = env_or("BEESTAR_SERVER", "http://127.0.0.1:7311");
    std::string agent = env_or("BEESTAR_AGENT", "");
    if (argc > 1) agent = argv[1];
    if (agent.empty()) {
        std::cerr << "usage: BEESTAR_AGENT=<name> [BEESTAR_SERVER=<addr>] beestar-agent\n";
        return 1;
    }

    beestar::AgentService::Options options;
    const std::string listen = env_or("BEESTAR_AGENT_LISTEN", "");
    if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) {
            std::cerr << "beestar-agent: BEESTAR_AGENT_LISTEN must be host:port\n";
            return 1;
        }
        options.listen_host = listen.substr(0, colon);
        options.listen_port = std::atoi(listen.c_str() + colon + 1);
    }
    options.executor.env = {{"BEESTAR_SERVER", server}, {"BEESTAR_AGENT", agent}};

    std::signal(SIGTERM, on_signal);
    std::signal(SIGINT, on_signal);
    std::signal(SIGPIPE, SIG_IGN);
    return beestar::run_agent(server, agent, g_stop, options);
}
