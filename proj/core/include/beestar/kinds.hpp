#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beestar/value.hpp"

namespace beestar {

namespace kind {
inline constexpr std::string_view Entity = "Entity";
inline constexpr std::string_view Agent = "AgentEntity";
inline constexpr std::string_view Display = "DisplayEntity";
inline constexpr std::string_view Gallery = "GalleryEntity";
inline constexpr std::string_view Graph = "GraphEntity";
inline constexpr std::string_view Status = "StatusEntity";
inline constexpr std::string_view Log = "LogEntity";
inline constexpr std::string_view CodeEditor = "CodeEditorEntity";
inline constexpr std::string_view Input = "InputEntity";
inline constexpr std::string_view Button = "ButtonEntity";
} // namespace kind

namespace prop {
inline constexpr std::string_view SourceCode = "source code";
inline constexpr std::string_view Input = "input";
inline constexpr std::string_view Output = "output";
inline constexpr std::string_view Requirements = "requirements";
inline constexpr std::string_view Status = "status";
inline constexpr std::string_view Value = "value";
inline constexpr std::string_view Message = "message";
} // namespace prop

struct PropertySchema {
    std::string name;
    ValueType type = ValueType::Any;
    Value fill; // used when a new entity omits this property
};

struct KindSchema {
    std::string name;
    std::optional<std::string> parent; // empty only for the root kind
    std::vector<PropertySchema> required;
    bool builtin = false;
};

/// The kind hierarchy. Every chain ends at `Entity`.
class KindRegistry {
public:
    /// Registers the built-in kinds.
    KindRegistry();

    /// Adds a custom kind extending `parent`. Throws DuplicateName,
    /// UnknownKind, or ValidationError (bad property identifier).
    void register_kind(std::string name, std::string parent,
                       std::vector<PropertySchema> required = {});

    bool contains(std::string_view name) const;
    const KindSchema& at(std::string_view name) const; // throws UnknownKind

    /// [name, parent, ..., Entity]
    std::vector<std::string> chain(std::string_view name) const;
    bool is_a(std::string_view name, std::string_view ancestor) const;

    /// Required properties along the whole chain, most-derived first; a
    /// derived declaration shadows an inherited one with the same name.
    std::vector<PropertySchema> required_properties(std::string_view name) const;

    /// Property whose change fires outgoing Sets edges, if the kind has one
    /// (AgentEntity → output, InputEntity → value).
    std::optional<std::string> emission_property(std::string_view name) const;

    /// Custom kinds in registration order.
    std::vector<const KindSchema*> custom_kinds() const;

private:
    std::map<std::string, KindSchema, std::less<>> kinds_;
    std::vector<std::string> custom_order_;
};

} // namespace beestar
