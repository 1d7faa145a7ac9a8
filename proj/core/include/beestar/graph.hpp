#pragma once

// Typed property graph: entities with declared-type properties, labelled
// edges ordered by insertion ordinal, and the kind hierarchy.
//
// Graph is a plain value type with no internal locking. Shared access goes
// through propagation::Engine, which serializes writers.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "beestar/edge_label.hpp"
#include "beestar/kinds.hpp"
#include "beestar/value.hpp"

namespace beestar {

struct EntityId {
    std::uint64_t value = 0;
    auto operator<=>(const EntityId&) const = default;
};

struct EdgeId {
    std::uint64_t value = 0;
    auto operator<=>(const EdgeId&) const = default;
};

struct Property {
    std::string name;
    ValueType declared_type = ValueType::Any;
    Value value;
    std::uint64_t version = 0;
};

struct Entity {
    EntityId id;
    std::string name;
    std::string kind;
    std::map<std::string, Property, std::less<>> properties;

    const Property* find(std::string_view prop) const;
};

struct Edge {
    EdgeId id;
    EntityId from;
    EntityId to;
    EdgeLabel label;
    std::uint64_t ordinal = 0;
};

struct PropertyInit {
    std::string name;
    ValueType type = ValueType::Any;
    Value value;
};

enum class Strictness {
    Strict, // Watches/Sets edges must name an existing property
    Lax,    // dangling property names are accepted with a warning
};

class Graph {
public:
    explicit Graph(Strictness strictness = Strictness::Strict);

    Strictness strictness() const noexcept { return strictness_; }
    void set_strictness(Strictness s) noexcept { strictness_ = s; }

    KindRegistry& kinds() noexcept { return kinds_; }
    const KindRegistry& kinds() const noexcept { return kinds_; }

    /// Creates an entity of a registered kind. Required properties of the
    /// kind that are not supplied are filled from the schema (null unless
    /// the schema says otherwise).
    ///
    /// Throws DuplicateName, UnknownKind, SchemaViolation, ValidationError.
    EntityId create_entity(std::string name, std::string_view kind,
                           std::vector<PropertyInit> props = {});

    /// Adds a labelled edge between two named entities. "is a" edges are
    /// fixed at creation and rejected here with KindImmutable.
    ///
    /// Throws UnknownEntity, BadLabelGrammar, DanglingProperty (strict),
    /// DuplicateEdge, KindImmutable, SchemaViolation (messages edge to a
    /// non-agent).
    EdgeId add_edge(std::string_view from, std::string_view to, std::string_view label);
    EdgeId add_edge(std::string_view from, std::string_view to, const EdgeLabel& label);

    /// Removes the entity and every edge touching it.
    void remove_entity(std::string_view name);
    void remove_edge(EdgeId id);

    /// Declares an extra property on an existing entity.
    void add_property(std::string_view entity, PropertyInit prop);

    bool contains(std::string_view name) const;
    const Entity* find(std::string_view name) const;
    const Entity& entity(std::string_view name) const; // throws UnknownEntity
    const Entity& entity(EntityId id) const;
    const Property& property(std::string_view entity, std::string_view prop) const;

    /// Entities in creation order.
    const std::vector<Entity>& entities() const noexcept { return entities_; }
    /// Edges in ordinal order.
    std::vector<const Edge*> edges() const;
    const Edge* find_edge(EdgeId id) const;
    std::size_t edge_count() const noexcept { return edges_.size(); }

    std::vector<std::string> kind_chain(std::string_view entity) const;
    bool is_a(std::string_view entity, std::string_view kind) const;
    bool is_a(EntityId entity, std::string_view kind) const;

    /// Entities holding a "watches <prop>" edge to `entity`, ordinal order.
    std::vector<EntityId> watchers_of(std::string_view entity, std::string_view prop) const;
    /// Watch edges into (entity, prop), ordinal order.
    std::vector<const Edge*> watch_edges(EntityId entity, std::string_view prop) const;
    /// Targets of outgoing Sets edges, ordinal order.
    std::vector<std::pair<EntityId, std::string>> set_targets_of(std::string_view entity) const;
    std::vector<const Edge*> set_edges(EntityId entity) const;
    /// Targets of outgoing "messages" edges, ordinal order.
    std::vector<EntityId> message_targets_of(std::string_view entity) const;

    /// Type-checked assignment: bumps the version by one. Throws TypeError
    /// leaving the property untouched.
    void assign(EntityId entity, std::string_view prop, Value value);

    /// Writes a value and version verbatim (event replay).
    void restore(std::string_view entity, std::string_view prop, Value value,
                 std::uint64_t version);

private:
    Entity& mutable_entity(EntityId id);
    std::size_t index_of(EntityId id) const;
    void reindex();

    Strictness strictness_;
    KindRegistry kinds_;
    std::vector<Entity> entities_;
    std::unordered_map<std::string, std::size_t> by_name_;
    std::unordered_map<std::uint64_t, std::size_t> by_id_;
    std::map<std::uint64_t, Edge> edges_; // keyed by ordinal
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> out_edges_;
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> in_edges_;
    std::uint64_t next_entity_id_ = 1;
    std::uint64_t next_ordinal_ = 0;
};

} // namespace beestar

template <>
struct std::hash<beestar::EntityId> {
    std::size_t operator()(const beestar::EntityId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
