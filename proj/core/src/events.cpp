#include "beestar/events.hpp"

#include "beestar/error.hpp"

namespace beestar {

using nlohmann::json;

namespace {
constexpr std::string_view kSetsPrefix = "sets-edge from ";
constexpr std::string_view kWatchPrefix = "watch-trigger from ";
} // namespace

std::string Cause::str() const {
    switch (kind) {
    case Kind::External: return "external-set";
    case Kind::SetsEdge: return std::string(kSetsPrefix) + source;
    case Kind::WatchFill: return std::string(kWatchPrefix) + source;
    case Kind::AgentRun: return "agent-run";
    case Kind::AgentStatus: return "agent-status";
    case Kind::AgentCode: return "agent-code";
    }
    return {};
}

Cause Cause::parse(std::string_view text) {
    if (text == "external-set") return external();
    if (text == "agent-run") return agent_run();
    if (text == "agent-status") return agent_status();
    if (text == "agent-code") return agent_code();
    if (text.starts_with(kSetsPrefix) && text.size() > kSetsPrefix.size()) {
        return sets_edge(std::string(text.substr(kSetsPrefix.size())));
    }
    if (text.starts_with(kWatchPrefix) && text.size() > kWatchPrefix.size()) {
        return watch_fill(std::string(text.substr(kWatchPrefix.size())));
    }
    throw Error(ErrorCode::ValidationError, "unknown cause '" + std::string(text) + "'");
}

json ChangeEvent::to_json() const {
    return json{{"seq", seq},
                {"wave", wave},
                {"entity", entity},
                {"property", property},
                {"old", old_value.to_json()},
                {"new", new_value.to_json()},
                {"version", version},
                {"cause", cause.str()}};
}

ChangeEvent ChangeEvent::from_json(const json& doc) {
    try {
        ChangeEvent e;
        e.seq = doc.at("seq").get<std::uint64_t>();
        e.wave = doc.at("wave").get<std::uint64_t>();
        e.entity = doc.at("entity").get<std::string>();
        e.property = doc.at("property").get<std::string>();
        e.old_value = Value::from_json(doc.at("old"));
        e.new_value = Value::from_json(doc.at("new"));
        e.version = doc.at("version").get<std::uint64_t>();
        e.cause = Cause::parse(doc.at("cause").get<std::string>());
        return e;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::ValidationError, std::string("bad change event: ") + ex.what());
    }
}

std::string_view to_string(WaveStatus s) noexcept {
    switch (s) {
    case WaveStatus::Committed: return "committed";
    case WaveStatus::TypeError: return "type_error";
    case WaveStatus::CycleError: return "cycle_error";
    case WaveStatus::ChainDepthExceeded: return "chain_depth_exceeded";
    }
    return "?";
}

json WaveReport::summary() const {
    json triggered = json::array();
    for (const auto& t : triggers) triggered.push_back(t.agent);
    json notified = json::array();
    for (const auto& n : notifications) notified.push_back(n.display);
    json out{{"wave", wave},
             {"status", std::string(to_string(status))},
             {"events", events.size()},
             {"triggers", std::move(triggered)},
             {"notifications", std::move(notified)}};
    if (!detail.empty()) out["detail"] = detail;
    if (!events.empty()) {
        out["first_seq"] = events.front().seq;
        out["last_seq"] = events.back().seq;
    }
    return out;
}

} // namespace beestar
