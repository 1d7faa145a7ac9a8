#include "beestar/builder.hpp"

namespace beestar {

std::vector<EdgeId> EntityRef::sets(const std::string& prop,
                                    std::initializer_list<EntityRef> targets) const {
    return link(EdgeLabel::sets(prop), std::vector<EntityRef>(targets));
}

std::vector<EdgeId> EntityRef::sets(const std::string& prop,
                                    const std::vector<EntityRef>& targets) const {
    return link(EdgeLabel::sets(prop), targets);
}

std::vector<EdgeId> EntityRef::watch(const std::string& prop,
                                     std::initializer_list<EntityRef> targets) const {
    return link(EdgeLabel::watches(prop), std::vector<EntityRef>(targets));
}

std::vector<EdgeId> EntityRef::watch(const std::string& prop,
                                     const std::vector<EntityRef>& targets) const {
    return link(EdgeLabel::watches(prop), targets);
}

EdgeId EntityRef::messages(const EntityRef& agent) const {
    return graph_->add_edge(name(), agent.name(), EdgeLabel::messages());
}

std::vector<EdgeId> EntityRef::link(const EdgeLabel& label,
                                    const std::vector<EntityRef>& targets) const {
    std::vector<EdgeId> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(graph_->add_edge(name(), t.name(), label));
    return out;
}

EntityRef Builder::entity(std::string name, std::vector<PropertyInit> props) {
    return make(std::move(name), kind::Entity, std::move(props));
}

EntityRef Builder::make(std::string name, std::string_view kind, std::vector<PropertyInit> props) {
    return EntityRef(graph_, graph_.create_entity(std::move(name), kind, std::move(props)));
}

EntityRef Builder::agent(std::string name, Value source_code, std::vector<Value> requirements) {
    return make(std::move(name), kind::Agent,
                {{std::string(prop::SourceCode), ValueType::Code, std::move(source_code)},
                 {std::string(prop::Requirements), ValueType::Array,
                  Value::array(std::move(requirements))}});
}

EntityRef Builder::input(std::string name, std::string label) {
    std::vector<PropertyInit> props;
    if (!label.empty()) props.push_back({"label", ValueType::String, Value::string(std::move(label))});
    return make(std::move(name), kind::Input, std::move(props));
}

EntityRef Builder::button(std::string name, std::string label, std::string verb) {
    return make(std::move(name), kind::Button,
                {{"label", ValueType::String, Value::string(std::move(label))},
                 {std::string(prop::Message), ValueType::String, Value::string(std::move(verb))}});
}

EntityRef Builder::gallery(std::string name, std::string background, std::string border) {
    std::vector<PropertyInit> props;
    if (!background.empty()) {
        props.push_back({"background", ValueType::String, Value::string(std::move(background))});
    }
    if (!border.empty()) props.push_back({"border", ValueType::String, Value::string(std::move(border))});
    return make(std::move(name), kind::Gallery, std::move(props));
}

} // namespace beestar
