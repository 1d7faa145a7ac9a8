#include "beestar/kinds.hpp"

#include <algorithm>

#include "beestar/edge_label.hpp"
#include "beestar/error.hpp"

namespace beestar {

namespace {

PropertySchema req(std::string_view name, ValueType type, Value fill = Value::null()) {
    return PropertySchema{std::string(name), type, std::move(fill)};
}

} // namespace

KindRegistry::KindRegistry() {
    auto add = [this](std::string_view name, std::optional<std::string_view> parent,
                      std::vector<PropertySchema> props) {
        KindSchema k;
        k.name = std::string(name);
        if (parent) k.parent = std::string(*parent);
        k.required = std::move(props);
        k.builtin = true;
        kinds_.emplace(k.name, std::move(k));
    };
    add(kind::Entity, std::nullopt, {});
    add(kind::Agent, kind::Entity,
        {req(prop::SourceCode, ValueType::Code), req(prop::Input, ValueType::Any),
         req(prop::Output, ValueType::Any),
         req(prop::Requirements, ValueType::Array, Value::array({})),
         req(prop::Status, ValueType::String, Value::string("idle"))});
    add(kind::Display, kind::Entity, {});
    add(kind::Gallery, kind::Display,
        {req("background", ValueType::String), req("border", ValueType::String)});
    add(kind::Graph, kind::Display, {req("title", ValueType::String)});
    add(kind::Status, kind::Display, {});
    add(kind::Log, kind::Display, {req("lines", ValueType::Array, Value::array({}))});
    add(kind::CodeEditor, kind::Display, {});
    add(kind::Input, kind::Entity,
        {req("label", ValueType::String), req(prop::Value, ValueType::Any)});
    add(kind::Button, kind::Entity,
        {req("label", ValueType::String), req(prop::Message, ValueType::String)});
}

void KindRegistry::register_kind(std::string name, std::string parent,
                                 std::vector<PropertySchema> required) {
    if (!is_identifier(name)) {
        throw Error(ErrorCode::ValidationError, "bad kind name '" + name + "'");
    }
    if (kinds_.contains(name)) throw Error(ErrorCode::DuplicateName, "kind '" + name + "' exists");
    if (!kinds_.contains(parent)) throw Error(ErrorCode::UnknownKind, "unknown kind '" + parent + "'");
    for (const auto& p : required) {
        if (!is_identifier(p.name)) {
            throw Error(ErrorCode::ValidationError, "bad property name '" + p.name + "'");
        }
        if (!assignable(p.type, p.fill)) {
            throw Error(ErrorCode::SchemaViolation, "fill value for '" + p.name + "' has wrong type");
        }
    }
    KindSchema k{name, std::move(parent), std::move(required), false};
    kinds_.emplace(name, std::move(k));
    custom_order_.push_back(std::move(name));
}

bool KindRegistry::contains(std::string_view name) const { return kinds_.find(name) != kinds_.end(); }

const KindSchema& KindRegistry::at(std::string_view name) const {
    auto it = kinds_.find(name);
    if (it == kinds_.end()) {
        throw Error(ErrorCode::UnknownKind, "unknown kind '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<std::string> KindRegistry::chain(std::string_view name) const {
    std::vector<std::string> out;
    const KindSchema* k = &at(name);
    for (;;) {
        out.push_back(k->name);
        if (!k->parent) break;
        k = &at(*k->parent);
    }
    return out;
}

bool KindRegistry::is_a(std::string_view name, std::string_view ancestor) const {
    const KindSchema* k = &at(name);
    for (;;) {
        if (k->name == ancestor) return true;
        if (!k->parent) return false;
        k = &at(*k->parent);
    }
}

std::vector<PropertySchema> KindRegistry::required_properties(std::string_view name) const {
    std::vector<PropertySchema> out;
    for (const auto& kname : chain(name)) {
        for (const auto& p : at(kname).required) {
            auto dup = std::find_if(out.begin(), out.end(),
                                    [&](const PropertySchema& q) { return q.name == p.name; });
            if (dup == out.end()) out.push_back(p);
        }
    }
    return out;
}

std::optional<std::string> KindRegistry::emission_property(std::string_view name) const {
    if (is_a(name, kind::Agent)) return std::string(prop::Output);
    if (is_a(name, kind::Input)) return std::string(prop::Value);
    return std::nullopt;
}

std::vector<const KindSchema*> KindRegistry::custom_kinds() const {
    std::vector<const KindSchema*> out;
    for (const auto& n : custom_order_) out.push_back(&kinds_.find(n)->second);
    return out;
}

} // namespace beestar
