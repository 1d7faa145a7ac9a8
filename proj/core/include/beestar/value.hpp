#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace beestar {

// The primitive type system. `Any` is only valid as a declared type.
enum class ValueType {
    String,
    Number,
    Boolean,
    Array,
    Record,
    Link,
    Tensor,
    Code,
    Null,
    Any,
};

std::string_view to_string(ValueType type) noexcept;

/// Parses a type tag ("string", "number", ...). Throws Error(ValidationError)
/// for anything outside the closed set.
ValueType parse_value_type(std::string_view tag);

class Value;

struct Link {
    std::string locator;
    bool operator==(const Link&) const = default;
};

struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<double> data;
    bool operator==(const Tensor&) const = default;
};

struct Code {
    std::string language;
    std::string entrypoint;
    std::string text;
    bool operator==(const Code&) const = default;
};

using Array = std::vector<Value>;
using Record = std::map<std::string, Value>;

/// Tagged union over the runtime value tags (never `Any`).
///
/// Construction through the named factories validates payload invariants
/// (finite numbers, tensor shape/data agreement, non-empty link locators,
/// non-empty code language and text) and throws Error(InvalidValue).
class Value {
public:
    Value() = default;

    static Value null() { return Value(); }
    static Value string(std::string s);
    static Value number(double d);
    static Value boolean(bool b);
    static Value array(Array items);
    static Value record(Record fields);
    static Value link(std::string locator);
    static Value tensor(std::vector<std::uint64_t> shape, std::vector<double> data);
    static Value code(std::string language, std::string entrypoint, std::string text);

    ValueType type() const noexcept;
    bool is_null() const noexcept { return type() == ValueType::Null; }

    const std::string& as_string() const;
    double as_number() const;
    bool as_boolean() const;
    const Array& as_array() const;
    const Record& as_record() const;
    const Link& as_link() const;
    const Tensor& as_tensor() const;
    const Code& as_code() const;

    bool operator==(const Value&) const = default;

    /// Canonical document encoding. Links become {"link":s}, tensors
    /// {"shape":[..],"data":[..]}, code {"language","entrypoint","text"}.
    nlohmann::json to_json() const;

    /// Decodes a document. With a concrete `hint` the document must encode
    /// that type (null is always accepted). With `Any`, objects shaped like a
    /// link, tensor, or code value decode as such; other objects are records.
    static Value from_json(const nlohmann::json& doc, ValueType hint = ValueType::Any);

    /// Compact canonical text (sorted object keys, integral numbers without
    /// a fractional part).
    std::string canonical() const;

private:
    using Storage = std::variant<std::monostate, std::string, double, bool, Array, Record, Link,
                                 Tensor, Code>;
    explicit Value(Storage s) : storage_(std::move(s)) {}

    Storage storage_;
};

/// True when `value` may be stored in a slot declared as `declared`: same
/// tag, null, a link (a reference to where a value of the declared type is
/// stored), or any value when the slot is `Any`.
bool assignable(ValueType declared, const Value& value) noexcept;

/// Dumps a document in the canonical compact form used for logs and wire
/// frames.
std::string canonical_dump(const nlohmann::json& doc);

} // namespace beestar
