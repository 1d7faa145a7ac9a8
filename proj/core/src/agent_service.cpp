#include "beestar/agent_service.hpp"

#include <iostream>
#include <thread>

namespace beestar {

AgentService::AgentService(std::string server, std::string agent)
    : AgentService(std::move(server), std::move(agent), Options{}) {}

AgentService::AgentService(std::string server, std::string agent, Options options)
    : server_(std::move(server)),
      agent_(std::move(agent)),
      options_(std::move(options)),
      port_(server_),
      control_(server_),
      executor_(options_.executor) {
    runtime_ = std::make_unique<AgentRuntime>(agent_, port_, executor_);
}

AgentService::~AgentService() { shutdown(); }

void AgentService::start() {
    if (started_) return;
    try {
        port_.fetch(agent_); // locate the AgentEntity and its code
        runtime_->start();
        host_ = std::make_unique<AgentHost>(*runtime_, options_.listen_host, options_.listen_port);
        control_.register_agent(agent_, endpoint());
    } catch (const Error& e) {
        host_.reset();
        throw Error(ErrorCode::RegistrationFailure, agent_ + ": " + e.what());
    }
    started_ = true;
}

bool AgentService::heartbeat() {
    try {
        if (!control_.heartbeat(agent_)) control_.register_agent(agent_, endpoint());
        return true;
    } catch (const ApiError& e) {
        std::cerr << "beestar-agent " << agent_ << ": " << e.what() << "\n";
        return e.status() < 500;
    } catch (const Error&) {
        return false;
    }
}

void AgentService::shutdown() {
    if (!started_) return;
    started_ = false;
    runtime_->stop();
    runtime_->wait_idle(std::chrono::milliseconds(3000));
    if (host_) host_->stop();
    try {
        control_.unregister_agent(agent_);
    } catch (const Error&) {
        // server already gone
    }
    host_.reset();
    runtime_.reset();
    runtime_ = std::make_unique<AgentRuntime>(agent_, port_, executor_);
}

std::string AgentService::endpoint() const {
    if (!host_) return {};
    std::string ep = host_->endpoint();
    // a wildcard bind is reached through loopback locally
    if (ep.rfind("0.0.0.0:", 0) == 0) ep = "127.0.0.1:" + ep.substr(8);
    return ep;
}

int run_agent(const std::string& server, const std::string& agent, const std::atomic<bool>& stop,
              AgentService::Options options) {
    AgentService service(server, agent, std::move(options));
    try {
        service.start();
    } catch (const Error& e) {
        std::cerr << "beestar-agent: " << e.what() << "\n";
        return 1;
    }
    int failures = 0;
    constexpr int kMaxFailures = 5;
    auto last = std::chrono::steady_clock::now();
    while (!stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (std::chrono::steady_clock::now() - last < std::chrono::seconds(1)) continue;
        last = std::chrono::steady_clock::now();
        if (service.heartbeat()) {
            failures = 0;
        } else if (++failures >= kMaxFailures) {
            std::cerr << "beestar-agent " << agent << ": lost server " << server << "\n";
            service.runtime().stop();
            return 2;
        }
    }
    service.shutdown();
    return 0;
}

} // namespace beestar
