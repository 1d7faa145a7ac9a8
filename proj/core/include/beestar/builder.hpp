#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "beestar/graph.hpp"

namespace beestar {

class Builder;

/// Handle to an entity created through a Builder.
class EntityRef {
public:
    EntityRef(Graph& graph, EntityId id) : graph_(&graph), id_(id) {}

    EntityId id() const noexcept { return id_; }
    const std::string& name() const { return graph_->entity(id_).name; }

    /// One "sets <prop>" edge from this entity to each target.
    std::vector<EdgeId> sets(const std::string& prop, std::initializer_list<EntityRef> targets) const;
    std::vector<EdgeId> sets(const std::string& prop, const std::vector<EntityRef>& targets) const;

    /// One "watches <prop>" edge from this entity to each target.
    std::vector<EdgeId> watch(const std::string& prop, std::initializer_list<EntityRef> targets) const;
    std::vector<EdgeId> watch(const std::string& prop, const std::vector<EntityRef>& targets) const;

    /// "messages" edge to an agent (buttons).
    EdgeId messages(const EntityRef& agent) const;

private:
    std::vector<EdgeId> link(const EdgeLabel& label, const std::vector<EntityRef>& targets) const;

    Graph* graph_;
    EntityId id_;
};

/// Declarative facade over a Graph:
///
///   Builder app(graph);
///   auto prompt = app.entity("prompt", {{"word", ValueType::String}});
///   auto input = app.input("CLIPInputEntity");
///   input.sets("word", {prompt});
///   auto agt = app.agent("CLIPAgent", code);
///   agt.watch("word", {prompt});
class Builder {
public:
    explicit Builder(Graph& graph) : graph_(graph) {}

    EntityRef entity(std::string name, std::vector<PropertyInit> props = {});
    EntityRef make(std::string name, std::string_view kind, std::vector<PropertyInit> props = {});

    EntityRef agent(std::string name, Value source_code, std::vector<Value> requirements = {});
    EntityRef input(std::string name, std::string label = {});
    EntityRef button(std::string name, std::string label, std::string verb);
    EntityRef gallery(std::string name, std::string background = {}, std::string border = {});

    Graph& graph() noexcept { return graph_; }

private:
    Graph& graph_;
};

} // namespace beestar
