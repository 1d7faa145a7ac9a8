#include "beestar/value.hpp"

#include <cmath>

#include "beestar/error.hpp"

namespace beestar {

using nlohmann::json;

namespace {

constexpr double kMaxExactInteger = 9007199254740992.0; // 2^53

json encode_number(double d) {
    if (std::trunc(d) == d && std::fabs(d) < kMaxExactInteger) {
        return json(static_cast<std::int64_t>(d));
    }
    return json(d);
}

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::InvalidValue, what);
}

[[noreturn]] void mismatch(ValueType hint, const json& doc) {
    throw Error(ErrorCode::TypeError,
                "document " + doc.dump() + " does not encode a " + std::string(to_string(hint)));
}

bool has_exact_keys(const json& obj, std::initializer_list<const char*> keys) {
    if (obj.size() != keys.size()) return false;
    for (const char* k : keys) {
        if (!obj.contains(k)) return false;
    }
    return true;
}

bool looks_like_link(const json& doc) {
    return has_exact_keys(doc, {"link"}) && doc["link"].is_string();
}

bool looks_like_tensor(const json& doc) {
    return has_exact_keys(doc, {"shape", "data"}) && doc["shape"].is_array() &&
           doc["data"].is_array();
}

bool looks_like_code(const json& doc) {
    return has_exact_keys(doc, {"language", "entrypoint", "text"}) &&
           doc["language"].is_string() && doc["entrypoint"].is_string() &&
           doc["text"].is_string();
}

Value decode_tensor(const json& doc) {
    std::vector<std::uint64_t> shape;
    for (const auto& d : doc["shape"]) {
        if (!d.is_number_integer() || d.get<std::int64_t>() < 0) {
            invalid("tensor shape entries must be non-negative integers");
        }
        shape.push_back(d.get<std::uint64_t>());
    }
    std::vector<double> data;
    data.reserve(doc["data"].size());
    for (const auto& x : doc["data"]) {
        if (!x.is_number()) invalid("tensor data entries must be numbers");
        data.push_back(x.get<double>());
    }
    return Value::tensor(std::move(shape), std::move(data));
}

} // namespace

std::string_view to_string(ValueType type) noexcept {
    switch (type) {
    case ValueType::String: return "string";
    case ValueType::Number: return "number";
    case ValueType::Boolean: return "boolean";
    case ValueType::Array: return "array";
    case ValueType::Record: return "record";
    case ValueType::Link: return "link";
    case ValueType::Tensor: return "tensor";
    case ValueType::Code: return "code";
    case ValueType::Null: return "null";
    case ValueType::Any: return "any";
    }
    return "?";
}

ValueType parse_value_type(std::string_view tag) {
    static constexpr ValueType all[] = {
        ValueType::String, ValueType::Number, ValueType::Boolean, ValueType::Array,
        ValueType::Record, ValueType::Link,   ValueType::Tensor,  ValueType::Code,
        ValueType::Null,   ValueType::Any,
    };
    for (ValueType t : all) {
        if (to_string(t) == tag) return t;
    }
    throw Error(ErrorCode::ValidationError, "unknown value type '" + std::string(tag) + "'");
}

Value Value::string(std::string s) { return Value(Storage(std::move(s))); }

Value Value::number(double d) {
    if (!std::isfinite(d)) invalid("numbers must be finite");
    return Value(Storage(d));
}

Value Value::boolean(bool b) { return Value(Storage(b)); }

Value Value::array(Array items) { return Value(Storage(std::move(items))); }

Value Value::record(Record fields) { return Value(Storage(std::move(fields))); }

Value Value::link(std::string locator) {
    if (locator.empty()) invalid("link locator must be non-empty");
    return Value(Storage(Link{std::move(locator)}));
}

Value Value::tensor(std::vector<std::uint64_t> shape, std::vector<double> data) {
    std::uint64_t expected = 1;
    for (auto d : shape) expected *= d;
    if (expected != data.size()) {
        invalid("tensor data length " + std::to_string(data.size()) +
                " does not match shape product " + std::to_string(expected));
    }
    for (double x : data) {
        if (!std::isfinite(x)) invalid("tensor data must be finite");
    }
    return Value(Storage(Tensor{std::move(shape), std::move(data)}));
}

Value Value::code(std::string language, std::string entrypoint, std::string text) {
    if (language.empty()) invalid("code language must be non-empty");
    if (text.empty()) invalid("code text must be non-empty");
    return Value(Storage(Code{std::move(language), std::move(entrypoint), std::move(text)}));
}

ValueType Value::type() const noexcept {
    switch (storage_.index()) {
    case 0: return ValueType::Null;
    case 1: return ValueType::String;
    case 2: return ValueType::Number;
    case 3: return ValueType::Boolean;
    case 4: return ValueType::Array;
    case 5: return ValueType::Record;
    case 6: return ValueType::Link;
    case 7: return ValueType::Tensor;
    case 8: return ValueType::Code;
    }
    return ValueType::Null;
}

namespace {
template <typename T>
const T& get_or_throw(const auto& storage, ValueType want, ValueType have) {
    if (const T* p = std::get_if<T>(&storage)) return *p;
    throw Error(ErrorCode::TypeError, "expected " + std::string(to_string(want)) + ", have " +
                                          std::string(to_string(have)));
}
} // namespace

const std::string& Value::as_string() const {
    return get_or_throw<std::string>(storage_, ValueType::String, type());
}
double Value::as_number() const { return get_or_throw<double>(storage_, ValueType::Number, type()); }
bool Value::as_boolean() const { return get_or_throw<bool>(storage_, ValueType::Boolean, type()); }
const Array& Value::as_array() const { return get_or_throw<Array>(storage_, ValueType::Array, type()); }
const Record& Value::as_record() const {
    return get_or_throw<Record>(storage_, ValueType::Record, type());
}
const Link& Value::as_link() const { return get_or_throw<Link>(storage_, ValueType::Link, type()); }
const Tensor& Value::as_tensor() const {
    return get_or_throw<Tensor>(storage_, ValueType::Tensor, type());
}
const Code& Value::as_code() const { return get_or_throw<Code>(storage_, ValueType::Code, type()); }

json Value::to_json() const {
    switch (type()) {
    case ValueType::Null: return nullptr;
    case ValueType::String: return as_string();
    case ValueType::Number: return encode_number(as_number());
    case ValueType::Boolean: return as_boolean();
    case ValueType::Array: {
        json out = json::array();
        for (const auto& v : as_array()) out.push_back(v.to_json());
        return out;
    }
    case ValueType::Record: {
        json out = json::object();
        for (const auto& [k, v] : as_record()) out[k] = v.to_json();
        return out;
    }
    case ValueType::Link: return json{{"link", as_link().locator}};
    case ValueType::Tensor: {
        const auto& t = as_tensor();
        json data = json::array();
        for (double x : t.data) data.push_back(encode_number(x));
        return json{{"shape", t.shape}, {"data", std::move(data)}};
    }
    case ValueType::Code: {
        const auto& c = as_code();
        return json{{"language", c.language}, {"entrypoint", c.entrypoint}, {"text", c.text}};
    }
    case ValueType::Any: break;
    }
    return nullptr;
}

Value Value::from_json(const json& doc, ValueType hint) {
    if (doc.is_null()) return Value();
    if (doc.is_object() && looks_like_link(doc)) return link(doc["link"].get<std::string>());
    switch (hint) {
    case ValueType::Any:
        if (doc.is_string()) return string(doc.get<std::string>());
        if (doc.is_boolean()) return boolean(doc.get<bool>());
        if (doc.is_number()) return number(doc.get<double>());
        if (doc.is_array()) return from_json(doc, ValueType::Array);
        if (doc.is_object()) {
            if (looks_like_link(doc)) return link(doc["link"].get<std::string>());
            if (looks_like_tensor(doc)) return decode_tensor(doc);
            if (looks_like_code(doc)) {
                return code(doc["language"].get<std::string>(),
                            doc["entrypoint"].get<std::string>(), doc["text"].get<std::string>());
            }
            return from_json(doc, ValueType::Record);
        }
        break;
    case ValueType::String:
        if (doc.is_string()) return string(doc.get<std::string>());
        break;
    case ValueType::Number:
        if (doc.is_number()) return number(doc.get<double>());
        break;
    case ValueType::Boolean:
        if (doc.is_boolean()) return boolean(doc.get<bool>());
        break;
    case ValueType::Array:
        if (doc.is_array()) {
            Array items;
            items.reserve(doc.size());
            for (const auto& e : doc) items.push_back(from_json(e));
            return array(std::move(items));
        }
        break;
    case ValueType::Record:
        if (doc.is_object()) {
            Record fields;
            for (const auto& [k, v] : doc.items()) fields.emplace(k, from_json(v));
            return record(std::move(fields));
        }
        break;
    case ValueType::Link:
        if (doc.is_object() && looks_like_link(doc)) return link(doc["link"].get<std::string>());
        break;
    case ValueType::Tensor:
        if (doc.is_object() && looks_like_tensor(doc)) return decode_tensor(doc);
        break;
    case ValueType::Code:
        if (doc.is_object() && looks_like_code(doc)) {
            return code(doc["language"].get<std::string>(), doc["entrypoint"].get<std::string>(),
                        doc["text"].get<std::string>());
        }
        break;
    case ValueType::Null: break;
    }
    mismatch(hint, doc);
}

std::string Value::canonical() const { return canonical_dump(to_json()); }

bool assignable(ValueType declared, const Value& value) noexcept {
    return declared == ValueType::Any || value.is_null() || value.type() == ValueType::Link ||
           value.type() == declared;
}

std::string canonical_dump(const json& doc) {
    return doc.dump(-1, ' ', false, json::error_handler_t::strict);
}

} // namespace beestar
