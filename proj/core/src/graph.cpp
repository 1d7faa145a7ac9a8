#include "beestar/graph.hpp"

#include <algorithm>
#include <iostream>

#include "beestar/error.hpp"

namespace beestar {

const Property* Entity::find(std::string_view prop) const {
    auto it = properties.find(prop);
    return it == properties.end() ? nullptr : &it->second;
}

Graph::Graph(Strictness strictness) : strictness_(strictness) {}

EntityId Graph::create_entity(std::string name, std::string_view kind,
                              std::vector<PropertyInit> props) {
    if (name.empty()) throw Error(ErrorCode::ValidationError, "entity name must be non-empty");
    if (by_name_.contains(name)) {
        throw Error(ErrorCode::DuplicateName, "entity '" + name + "' already exists");
    }
    const auto schema = kinds_.required_properties(kind); // throws UnknownKind

    Entity e;
    e.name = std::move(name);
    e.kind = std::string(kind);
    for (auto& p : props) {
        if (!is_identifier(p.name)) {
            throw Error(ErrorCode::ValidationError, "bad property name '" + p.name + "'");
        }
        if (p.type == ValueType::Null) {
            throw Error(ErrorCode::ValidationError, "property '" + p.name + "' declared as null");
        }
        if (e.properties.contains(p.name)) {
            throw Error(ErrorCode::ValidationError, "property '" + p.name + "' declared twice");
        }
        auto req = std::find_if(schema.begin(), schema.end(),
                                [&](const PropertySchema& s) { return s.name == p.name; });
        if (req != schema.end() && req->type != ValueType::Any && p.type != req->type) {
            throw Error(ErrorCode::SchemaViolation,
                        "property '" + p.name + "' of kind " + std::string(kind) + " must be " +
                            std::string(to_string(req->type)));
        }
        if (!assignable(p.type, p.value)) {
            throw Error(ErrorCode::SchemaViolation,
                        "initial value of '" + p.name + "' is not a " +
                            std::string(to_string(p.type)));
        }
        e.properties.emplace(p.name, Property{p.name, p.type, std::move(p.value), 0});
    }
    for (const auto& s : schema) {
        if (!e.properties.contains(s.name)) {
            e.properties.emplace(s.name, Property{s.name, s.type, s.fill, 0});
        }
    }

    e.id = EntityId{next_entity_id_++};
    const EntityId id = e.id;
    by_name_.emplace(e.name, entities_.size());
    by_id_.emplace(id.value, entities_.size());
    entities_.push_back(std::move(e));
    return id;
}

EdgeId Graph::add_edge(std::string_view from, std::string_view to, std::string_view label) {
    return add_edge(from, to, EdgeLabel::parse(label));
}

EdgeId Graph::add_edge(std::string_view from, std::string_view to, const EdgeLabel& label) {
    const Entity& src = entity(from);
    const Entity& dst = entity(to);
    switch (label.kind) {
    case EdgeLabel::Kind::IsA:
        throw Error(ErrorCode::KindImmutable,
                    "kind of '" + src.name + "' is fixed at creation; \"is a\" edges cannot be added");
    case EdgeLabel::Kind::Watches:
    case EdgeLabel::Kind::Sets:
        if (!is_identifier(label.prop)) {
            throw Error(ErrorCode::BadLabelGrammar, "bad property name '" + label.prop + "'");
        }
        if (!dst.find(label.prop)) {
            if (strictness_ == Strictness::Strict) {
                throw Error(ErrorCode::DanglingProperty,
                            "'" + dst.name + "' has no property '" + label.prop + "'");
            }
            std::cerr << "beestar: warning: edge '" << label.str() << "' from '" << src.name
                      << "' names missing property on '" << dst.name << "'\n";
        }
        break;
    case EdgeLabel::Kind::Messages:
        if (!kinds_.is_a(dst.kind, kind::Agent)) {
            throw Error(ErrorCode::SchemaViolation,
                        "messages edge target '" + dst.name + "' is not an AgentEntity");
        }
        break;
    }
    for (auto ord : out_edges_[src.id.value]) {
        const Edge& e = edges_.at(ord);
        if (e.to == dst.id && e.label == label) {
            throw Error(ErrorCode::DuplicateEdge, "edge " + src.name + " -[" + label.str() + "]-> " +
                                                      dst.name + " already exists");
        }
    }
    const std::uint64_t ord = next_ordinal_++;
    edges_.emplace(ord, Edge{EdgeId{ord}, src.id, dst.id, label, ord});
    out_edges_[src.id.value].push_back(ord);
    in_edges_[dst.id.value].push_back(ord);
    return EdgeId{ord};
}

void Graph::remove_entity(std::string_view name) {
    const EntityId id = entity(name).id;
    std::vector<std::uint64_t> doomed;
    if (auto it = out_edges_.find(id.value); it != out_edges_.end()) {
        doomed.insert(doomed.end(), it->second.begin(), it->second.end());
    }
    if (auto it = in_edges_.find(id.value); it != in_edges_.end()) {
        doomed.insert(doomed.end(), it->second.begin(), it->second.end());
    }
    std::sort(doomed.begin(), doomed.end());
    doomed.erase(std::unique(doomed.begin(), doomed.end()), doomed.end());
    for (auto ord : doomed) remove_edge(EdgeId{ord});
    out_edges_.erase(id.value);
    in_edges_.erase(id.value);
    entities_.erase(entities_.begin() + static_cast<std::ptrdiff_t>(index_of(id)));
    reindex();
}

void Graph::remove_edge(EdgeId id) {
    auto it = edges_.find(id.value);
    if (it == edges_.end()) {
        throw Error(ErrorCode::UnknownEdge, "no edge with id " + std::to_string(id.value));
    }
    auto drop = [&](auto& index, std::uint64_t key) {
        auto& v = index[key];
        v.erase(std::remove(v.begin(), v.end(), id.value), v.end());
    };
    drop(out_edges_, it->second.from.value);
    drop(in_edges_, it->second.to.value);
    edges_.erase(it);
}

void Graph::add_property(std::string_view name, PropertyInit prop) {
    Entity& e = mutable_entity(entity(name).id);
    if (!is_identifier(prop.name)) {
        throw Error(ErrorCode::ValidationError, "bad property name '" + prop.name + "'");
    }
    if (e.properties.contains(prop.name)) {
        throw Error(ErrorCode::DuplicateName,
                    "'" + e.name + "' already has property '" + prop.name + "'");
    }
    if (prop.type == ValueType::Null || !assignable(prop.type, prop.value)) {
        throw Error(ErrorCode::SchemaViolation, "bad declaration for '" + prop.name + "'");
    }
    e.properties.emplace(prop.name, Property{prop.name, prop.type, std::move(prop.value), 0});
}

bool Graph::contains(std::string_view name) const { return find(name) != nullptr; }

const Entity* Graph::find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : &entities_[it->second];
}

const Entity& Graph::entity(std::string_view name) const {
    if (const Entity* e = find(name)) return *e;
    throw Error(ErrorCode::UnknownEntity, "unknown entity '" + std::string(name) + "'");
}

const Entity& Graph::entity(EntityId id) const { return entities_[index_of(id)]; }

const Property& Graph::property(std::string_view name, std::string_view prop) const {
    const Entity& e = entity(name);
    if (const Property* p = e.find(prop)) return *p;
    throw Error(ErrorCode::UnknownProperty,
                "'" + e.name + "' has no property '" + std::string(prop) + "'");
}

std::vector<const Edge*> Graph::edges() const {
    std::vector<const Edge*> out;
    out.reserve(edges_.size());
    for (const auto& [_, e] : edges_) out.push_back(&e);
    return out;
}

const Edge* Graph::find_edge(EdgeId id) const {
    auto it = edges_.find(id.value);
    return it == edges_.end() ? nullptr : &it->second;
}

std::vector<std::string> Graph::kind_chain(std::string_view name) const {
    return kinds_.chain(entity(name).kind);
}

bool Graph::is_a(std::string_view name, std::string_view kind) const {
    return kinds_.is_a(entity(name).kind, kind);
}

bool Graph::is_a(EntityId id, std::string_view kind) const {
    return kinds_.is_a(entity(id).kind, kind);
}

std::vector<EntityId> Graph::watchers_of(std::string_view name, std::string_view prop) const {
    std::vector<EntityId> out;
    for (const Edge* e : watch_edges(entity(name).id, prop)) out.push_back(e->from);
    return out;
}

std::vector<const Edge*> Graph::watch_edges(EntityId id, std::string_view prop) const {
    std::vector<const Edge*> out;
    auto it = in_edges_.find(id.value);
    if (it == in_edges_.end()) return out;
    for (auto ord : it->second) {
        const Edge& e = edges_.at(ord);
        if (e.label.kind == EdgeLabel::Kind::Watches && e.label.prop == prop) out.push_back(&e);
    }
    return out;
}

std::vector<std::pair<EntityId, std::string>> Graph::set_targets_of(std::string_view name) const {
    std::vector<std::pair<EntityId, std::string>> out;
    for (const Edge* e : set_edges(entity(name).id)) out.emplace_back(e->to, e->label.prop);
    return out;
}

std::vector<const Edge*> Graph::set_edges(EntityId id) const {
    std::vector<const Edge*> out;
    auto it = out_edges_.find(id.value);
    if (it == out_edges_.end()) return out;
    for (auto ord : it->second) {
        const Edge& e = edges_.at(ord);
        if (e.label.kind == EdgeLabel::Kind::Sets) out.push_back(&e);
    }
    return out;
}

std::vector<EntityId> Graph::message_targets_of(std::string_view name) const {
    std::vector<EntityId> out;
    auto it = out_edges_.find(entity(name).id.value);
    if (it == out_edges_.end()) return out;
    for (auto ord : it->second) {
        const Edge& e = edges_.at(ord);
        if (e.label.kind == EdgeLabel::Kind::Messages) out.push_back(e.to);
    }
    return out;
}

void Graph::assign(EntityId id, std::string_view prop, Value value) {
    Entity& e = mutable_entity(id);
    auto it = e.properties.find(prop);
    if (it == e.properties.end()) {
        throw Error(ErrorCode::UnknownProperty,
                    "'" + e.name + "' has no property '" + std::string(prop) + "'");
    }
    Property& p = it->second;
    if (!assignable(p.declared_type, value)) {
        throw Error(ErrorCode::TypeError, e.name + "." + p.name + " is declared " +
                                              std::string(to_string(p.declared_type)) +
                                              ", got " + std::string(to_string(value.type())));
    }
    p.value = std::move(value);
    ++p.version;
}

void Graph::restore(std::string_view name, std::string_view prop, Value value,
                    std::uint64_t version) {
    Entity& e = mutable_entity(entity(name).id);
    auto it = e.properties.find(prop);
    if (it == e.properties.end()) {
        throw Error(ErrorCode::UnknownProperty,
                    "'" + e.name + "' has no property '" + std::string(prop) + "'");
    }
    it->second.value = std::move(value);
    it->second.version = version;
}

Entity& Graph::mutable_entity(EntityId id) { return entities_[index_of(id)]; }

std::size_t Graph::index_of(EntityId id) const {
    auto it = by_id_.find(id.value);
    if (it == by_id_.end()) {
        throw Error(ErrorCode::UnknownEntity, "unknown entity id " + std::to_string(id.value));
    }
    return it->second;
}

void Graph::reindex() {
    by_name_.clear();
    by_id_.clear();
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        by_name_.emplace(entities_[i].name, i);
        by_id_.emplace(entities_[i].id.value, i);
    }
}

} // namespace beestar
