#include "beestar/program.hpp"

#include "beestar/error.hpp"

namespace beestar {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& locus, const std::string& what) {
    throw Error(ErrorCode::ValidationError, locus + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& locus) {
    if (!obj.is_object() || !obj.contains(key)) invalid(locus, std::string("missing \"") + key + "\"");
    return obj[key];
}

std::string string_field(const json& obj, const char* key, const std::string& locus) {
    const json& v = field(obj, key, locus);
    if (!v.is_string()) invalid(locus, std::string("\"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::map<std::string, ProgramSpec::PropertyDecl> parse_properties(const json& obj,
                                                                  const std::string& locus) {
    std::map<std::string, ProgramSpec::PropertyDecl> out;
    if (!obj.contains("properties")) return out;
    const json& props = obj["properties"];
    if (!props.is_object()) invalid(locus, "\"properties\" must be an object");
    for (const auto& [name, decl] : props.items()) {
        const std::string where = locus + " property '" + name + "'";
        try {
            ProgramSpec::PropertyDecl d;
            d.type = parse_value_type(string_field(decl, "type", where));
            d.value = decl.contains("value") ? Value::from_json(decl["value"], d.type) : Value();
            out.emplace(name, std::move(d));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ValidationError) throw;
            invalid(where, e.what());
        }
    }
    return out;
}

json properties_json(const std::map<std::string, ProgramSpec::PropertyDecl>& props) {
    json out = json::object();
    for (const auto& [name, d] : props) {
        out[name] = json{{"type", std::string(to_string(d.type))}, {"value", d.value.to_json()}};
    }
    return out;
}

} // namespace

json ProgramSpec::to_json() const {
    json doc = json::object();
    if (!kinds.empty()) {
        json ks = json::array();
        for (const auto& k : kinds) {
            ks.push_back({{"name", k.name}, {"parent", k.parent},
                          {"properties", properties_json(k.properties)}});
        }
        doc["kinds"] = std::move(ks);
    }
    json es = json::array();
    for (const auto& e : entities) {
        es.push_back({{"name", e.name}, {"kind", e.kind},
                      {"properties", properties_json(e.properties)}});
    }
    json ed = json::array();
    for (const auto& e : edges) {
        ed.push_back({{"from", e.from}, {"to", e.to}, {"label", e.label}});
    }
    doc["entities"] = std::move(es);
    doc["edges"] = std::move(ed);
    return doc;
}

ProgramSpec ProgramSpec::from_json(const json& doc) {
    if (!doc.is_object()) invalid("document", "top level must be an object");
    ProgramSpec spec;
    if (doc.contains("kinds")) {
        const json& ks = doc["kinds"];
        if (!ks.is_array()) invalid("document", "\"kinds\" must be an array");
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const std::string locus = "kinds[" + std::to_string(i) + "]";
            KindDecl k;
            k.name = string_field(ks[i], "name", locus);
            k.parent = string_field(ks[i], "parent", locus + " '" + k.name + "'");
            k.properties = parse_properties(ks[i], locus + " '" + k.name + "'");
            spec.kinds.push_back(std::move(k));
        }
    }
    const json empty = json::array();
    const json& es = doc.contains("entities") ? doc["entities"] : empty;
    const json& ed = doc.contains("edges") ? doc["edges"] : empty;
    if (!es.is_array()) invalid("document", "\"entities\" must be an array");
    if (!ed.is_array()) invalid("document", "\"edges\" must be an array");
    for (std::size_t i = 0; i < es.size(); ++i) {
        std::string locus = "entities[" + std::to_string(i) + "]";
        EntityDecl e;
        e.name = string_field(es[i], "name", locus);
        locus += " '" + e.name + "'";
        e.kind = string_field(es[i], "kind", locus);
        e.properties = parse_properties(es[i], locus);
        spec.entities.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < ed.size(); ++i) {
        const std::string locus = "edges[" + std::to_string(i) + "]";
        EdgeDecl e;
        e.from = string_field(ed[i], "from", locus);
        e.to = string_field(ed[i], "to", locus);
        e.label = string_field(ed[i], "label", locus);
        spec.edges.push_back(std::move(e));
    }
    return spec;
}

ProgramSpec ProgramSpec::parse(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        invalid("document", e.what());
    }
    return from_json(doc);
}

std::string ProgramSpec::dump(int indent) const {
    if (indent < 0) return canonical_dump(to_json());
    return to_json().dump(indent);
}

Graph load_program(const ProgramSpec& doc, Strictness strictness) {
    Graph g(strictness);
    for (std::size_t i = 0; i < doc.kinds.size(); ++i) {
        const auto& k = doc.kinds[i];
        try {
            std::vector<PropertySchema> req;
            for (const auto& [name, d] : k.properties) req.push_back({name, d.type, d.value});
            g.kinds().register_kind(k.name, k.parent, std::move(req));
        } catch (const Error& e) {
            invalid("kinds[" + std::to_string(i) + "] '" + k.name + "'", e.what());
        }
    }
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
        const auto& e = doc.entities[i];
        try {
            std::vector<PropertyInit> props;
            for (const auto& [name, d] : e.properties) props.push_back({name, d.type, d.value});
            g.create_entity(e.name, e.kind, std::move(props));
        } catch (const Error& err) {
            invalid("entities[" + std::to_string(i) + "] '" + e.name + "'", err.what());
        }
    }
    for (std::size_t i = 0; i < doc.edges.size(); ++i) {
        const auto& e = doc.edges[i];
        try {
            g.add_edge(e.from, e.to, e.label);
        } catch (const Error& err) {
            invalid("edges[" + std::to_string(i) + "] " + e.from + " -[" + e.label + "]-> " + e.to,
                    err.what());
        }
    }
    return g;
}

ProgramSpec export_program(const Graph& graph) {
    ProgramSpec spec;
    for (const KindSchema* k : graph.kinds().custom_kinds()) {
        ProgramSpec::KindDecl d{k->name, k->parent.value_or(""), {}};
        for (const auto& p : k->required) d.properties.emplace(p.name, ProgramSpec::PropertyDecl{p.type, p.fill});
        spec.kinds.push_back(std::move(d));
    }
    for (const Entity& e : graph.entities()) {
        ProgramSpec::EntityDecl d{e.name, e.kind, {}};
        for (const auto& [name, p] : e.properties) {
            d.properties.emplace(name, ProgramSpec::PropertyDecl{p.declared_type, p.value});
        }
        spec.entities.push_back(std::move(d));
    }
    for (const Edge* e : graph.edges()) {
        spec.edges.push_back(
            {graph.entity(e->from).name, graph.entity(e->to).name, e->label.str()});
    }
    return spec;
}

json diff_programs(const ProgramSpec& a, const ProgramSpec& b) {
    return json::diff(a.to_json(), b.to_json());
}

} // namespace beestar
