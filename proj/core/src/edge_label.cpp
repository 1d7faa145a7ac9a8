#include "beestar/edge_label.hpp"

#include <cctype>

#include "beestar/error.hpp"

namespace beestar {

bool is_identifier(std::string_view s) noexcept {
    if (s.empty() || s.front() == ' ' || s.back() == ' ') return false;
    char prev = 0;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (c == ' ') {
            if (prev == ' ') return false;
        } else if (!std::isalnum(u) && c != '_') {
            return false;
        }
        prev = c;
    }
    return true;
}

EdgeLabel EdgeLabel::parse(std::string_view text) {
    constexpr std::string_view kWatches = "watches ";
    constexpr std::string_view kSets = "sets ";
    if (text == "is a") return is_a();
    if (text == "messages") return messages();
    std::string_view rest;
    Kind kind;
    if (text.starts_with(kWatches)) {
        kind = Kind::Watches;
        rest = text.substr(kWatches.size());
    } else if (text.starts_with(kSets)) {
        kind = Kind::Sets;
        rest = text.substr(kSets.size());
    } else {
        throw Error(ErrorCode::BadLabelGrammar, "bad edge label '" + std::string(text) + "'");
    }
    if (!is_identifier(rest)) {
        throw Error(ErrorCode::BadLabelGrammar,
                    "bad property name in edge label '" + std::string(text) + "'");
    }
    return {kind, std::string(rest)};
}

std::string EdgeLabel::str() const {
    switch (kind) {
    case Kind::IsA: return "is a";
    case Kind::Watches: return "watches " + prop;
    case Kind::Sets: return "sets " + prop;
    case Kind::Messages: return "messages";
    }
    return {};
}

} // namespace beestar
