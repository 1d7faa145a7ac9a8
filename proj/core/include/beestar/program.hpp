#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beestar/graph.hpp"

namespace beestar {

/// Serialized declarative application document.
///
///   {"entities":[{"name":s,"kind":s,"properties":{p:{"type":t,"value":v}}}],
///    "edges":[{"from":s,"to":s,"label":s}]}
///
/// Custom kinds travel in an optional "kinds" array
/// ([{"name":s,"parent":s,"properties":{p:{"type":t,"value":v}}}]) that is
/// omitted when empty.
struct ProgramSpec {
    struct PropertyDecl {
        ValueType type = ValueType::Any;
        Value value;
        bool operator==(const PropertyDecl&) const = default;
    };
    struct KindDecl {
        std::string name;
        std::string parent;
        std::map<std::string, PropertyDecl> properties;
        bool operator==(const KindDecl&) const = default;
    };
    struct EntityDecl {
        std::string name;
        std::string kind;
        std::map<std::string, PropertyDecl> properties;
        bool operator==(const EntityDecl&) const = default;
    };
    struct EdgeDecl {
        std::string from;
        std::string to;
        std::string label;
        bool operator==(const EdgeDecl&) const = default;
    };

    std::vector<KindDecl> kinds;
    std::vector<EntityDecl> entities;
    std::vector<EdgeDecl> edges;

    bool operator==(const ProgramSpec&) const = default;

    nlohmann::json to_json() const;
    /// Throws Error(ValidationError) naming the offending entity or edge.
    static ProgramSpec from_json(const nlohmann::json& doc);

    static ProgramSpec parse(std::string_view text);
    std::string dump(int indent = -1) const;
};

/// Materializes a document. Every failure is rethrown as ValidationError
/// prefixed with the locus ("entities[2] 'Prompt': ...").
Graph load_program(const ProgramSpec& doc, Strictness strictness = Strictness::Strict);

/// Entities in creation order, edges in ordinal order, current values.
ProgramSpec export_program(const Graph& graph);

/// JSON-patch style differences between two documents
/// ([{"op":..,"path":..,"value":..}]).
nlohmann::json diff_programs(const ProgramSpec& a, const ProgramSpec& b);

} // namespace beestar
