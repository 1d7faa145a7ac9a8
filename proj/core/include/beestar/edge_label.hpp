#pragma once

#include <string>
#include <string_view>

namespace beestar {

/// Property and kind identifiers: letters, digits, underscore and inner
/// single spaces ("source code"). No leading, trailing, or doubled spaces.
bool is_identifier(std::string_view s) noexcept;

// Edge label grammar: "is a" | "watches <prop>" | "sets <prop>" | "messages".
struct EdgeLabel {
    enum class Kind { IsA, Watches, Sets, Messages };

    Kind kind = Kind::IsA;
    std::string prop; // only for Watches / Sets

    static EdgeLabel is_a() { return {Kind::IsA, {}}; }
    static EdgeLabel watches(std::string p) { return {Kind::Watches, std::move(p)}; }
    static EdgeLabel sets(std::string p) { return {Kind::Sets, std::move(p)}; }
    static EdgeLabel messages() { return {Kind::Messages, {}}; }

    /// Throws Error(BadLabelGrammar).
    static EdgeLabel parse(std::string_view text);

    std::string str() const;

    bool operator==(const EdgeLabel&) const = default;
};

} // namespace beestar
