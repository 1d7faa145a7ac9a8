#pragma once

// Brute-force reference model of propagation, written without the engine.
//
// A wave from origin key k0 with value v reaches keys through two rules:
//   sets:    (src, emission(src)) reached  =>  (dst, q) reached
//   watches: (t, q) reached, w an agent    =>  (w, "input") reached
// The oracle counts derivation paths to every key by iterating to a fixed
// point. Any key with more than one path (or counts that never settle) is a
// cycle error; any reached key that cannot hold v is a type error. Either
// leaves the state untouched. Otherwise every reached key takes v and its
// version goes up by one.
//
// Agents triggered by a committed wave run FIFO in (wave, watch-edge order),
// reading their input at run time; "identity" and "const:<json>" only.

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "beestar/program.hpp"

namespace beestar::testing {

class Oracle {
public:
    using Key = std::pair<std::string, std::string>;

    struct Slot {
        ValueType declared = ValueType::Any;
        Value value;
        std::uint64_t version = 0;
        bool operator==(const Slot&) const = default;
    };

    explicit Oracle(const ProgramSpec& doc) {
        for (const auto& e : doc.entities) {
            kinds_[e.name] = e.kind;
            for (const auto& [p, decl] : e.properties) {
                state_[{e.name, p}] = Slot{decl.type, decl.value, 0};
            }
        }
        for (const auto& e : doc.edges) edges_.push_back(e);
    }

    /// External set followed by agent runs until quiet. Returns whether the
    /// external wave committed.
    bool set(const std::string& entity, const std::string& prop, const Value& v) {
        std::deque<std::string> queue;
        const bool ok = wave({entity, prop}, v, queue);
        while (!queue.empty()) {
            const std::string agent = queue.front();
            queue.pop_front();
            if (auto out = run_agent(agent)) wave({agent, "output"}, *out, queue);
        }
        return ok;
    }

    const std::map<Key, Slot>& state() const { return state_; }

private:
    static bool holds(ValueType declared, const Value& v) {
        if (declared == ValueType::Any) return true;
        const ValueType t = v.type();
        return t == ValueType::Null || t == ValueType::Link || t == declared;
    }

    bool is_agent(const std::string& e) const { return kinds_.at(e) == "AgentEntity"; }

    std::optional<std::string> emission(const std::string& e) const {
        const std::string& k = kinds_.at(e);
        if (k == "AgentEntity") return "output";
        if (k == "InputEntity") return "value";
        return std::nullopt;
    }

    static std::pair<std::string, std::string> parse_label(const std::string& label) {
        const auto sp = label.find(' ');
        if (sp == std::string::npos) return {label, ""};
        return {label.substr(0, sp), label.substr(sp + 1)};
    }

    bool wave(const Key& origin, const Value& v, std::deque<std::string>& queue) {
        // Path counts, recomputed from scratch until they stop changing.
        std::map<Key, int> count;
        const int limit = static_cast<int>(state_.size()) + 2;
        bool settled = false;
        for (int iter = 0; iter < limit; ++iter) {
            std::map<Key, int> next;
            next[origin] += 1;
            for (const auto& e : edges_) {
                const auto [verb, q] = parse_label(e.label);
                if (verb == "sets") {
                    const auto em = emission(e.from);
                    if (!em) continue;
                    auto it = count.find({e.from, *em});
                    if (it != count.end() && state_.contains({e.to, q})) next[{e.to, q}] += it->second;
                } else if (verb == "watches" && is_agent(e.from)) {
                    auto it = count.find({e.to, q});
                    if (it != count.end()) next[{e.from, "input"}] += it->second;
                }
            }
            if (next == count) {
                settled = true;
                break;
            }
            count = std::move(next);
        }
        if (!settled) return false;
        for (const auto& [k, n] : count) {
            if (n > 1) return false;
            if (!holds(state_.at(k).declared, v)) return false;
        }
        for (const auto& [k, n] : count) {
            Slot& s = state_.at(k);
            s.value = v;
            ++s.version;
        }
        for (const auto& e : edges_) {
            const auto [verb, q] = parse_label(e.label);
            if (verb == "watches" && is_agent(e.from) && count.contains({e.to, q})) {
                queue.push_back(e.from);
            }
        }
        return true;
    }

    std::optional<Value> run_agent(const std::string& agent) const {
        const Value& code = state_.at({agent, "source code"}).value;
        if (code.type() != ValueType::Code) return std::nullopt;
        const std::string& text = code.as_code().text;
        if (text == "identity") return state_.at({agent, "input"}).value;
        if (text.rfind("const:", 0) == 0) {
            return Value::from_json(nlohmann::json::parse(text.substr(6)));
        }
        return std::nullopt;
    }

    std::map<std::string, std::string> kinds_;
    std::map<Key, Slot> state_;
    std::vector<ProgramSpec::EdgeDecl> edges_;
};

} // namespace beestar::testing
