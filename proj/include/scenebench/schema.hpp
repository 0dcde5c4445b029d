#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scenebench/errors.hpp"

namespace scenebench {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Staged attributes describe proximity/progression and collapse to
// detected/not-detected for scoring; categorical attributes keep their
// full value range.
enum class AttributeKind { Categorical, Staged };

inline const char* attribute_kind_name(AttributeKind kind) {
    return kind == AttributeKind::Categorical ? "categorical" : "staged";
}

struct AttributeSpec {
    std::string_view key;
    AttributeKind kind;
    int domain_max;  // raw values are the closed range 0..domain_max

    int eval_max() const {
        return kind == AttributeKind::Staged ? 1 : domain_max;
    }
    bool in_domain(long long v) const { return v >= 0 && v <= domain_max; }
    bool in_eval_domain(long long v) const { return v >= 0 && v <= eval_max(); }

    std::vector<int> domain() const {
        std::vector<int> out(static_cast<size_t>(domain_max) + 1);
        for (int v = 0; v <= domain_max; ++v) out[static_cast<size_t>(v)] = v;
        return out;
    }
    std::vector<int> eval_domain() const {
        std::vector<int> out(static_cast<size_t>(eval_max()) + 1);
        for (int v = 0; v <= eval_max(); ++v) out[static_cast<size_t>(v)] = v;
        return out;
    }
};

inline constexpr size_t kAttributeCount = 21;

using AttributeSchema = std::array<AttributeSpec, kAttributeCount>;

// Canonical attribute registry. Keys are the exact output-template keys the
// models are instructed to echo, in template order.
inline const AttributeSchema& attribute_registry() {
    static const AttributeSchema schema = {{
        {"Ambient", AttributeKind::Categorical, 3},
        {"Attributes", AttributeKind::Categorical, 3},
        {"Construction_zone", AttributeKind::Staged, 3},
        {"Cross_walk", AttributeKind::Staged, 3},
        {"Driveway", AttributeKind::Staged, 3},
        {"Intersection (3 way)", AttributeKind::Staged, 3},
        {"Intersection (4 way)", AttributeKind::Staged, 3},
        {"Intersection (5 way & more)", AttributeKind::Staged, 3},
        {"Overhead_bridge/under_overpass", AttributeKind::Staged, 3},
        {"Tunnel", AttributeKind::Staged, 3},
        {"Rail_crossing", AttributeKind::Staged, 3},
        {"Surface", AttributeKind::Categorical, 4},
        {"Types", AttributeKind::Categorical, 5},
        {"Weather", AttributeKind::Categorical, 6},
        {"NoSignalIntersection", AttributeKind::Staged, 2},
        {"StopIntersection", AttributeKind::Staged, 2},
        {"Merge_GoreOnLeft", AttributeKind::Staged, 2},
        {"Merge_GoreOnRight", AttributeKind::Staged, 2},
        {"Branch_GoreOnLeft", AttributeKind::Staged, 2},
        {"Branch_GoreOnRight", AttributeKind::Staged, 2},
        {"ZebraCrossing", AttributeKind::Staged, 2},
    }};
    return schema;
}

inline const AttributeSpec* find_attribute(std::string_view key) {
    for (const AttributeSpec& attr : attribute_registry())
        if (attr.key == key) return &attr;
    return nullptr;
}

// Label in raw template values, as annotated or as a model answered.
using SceneLabel = std::map<std::string, int>;
// Label after staged attributes are collapsed to {0,1}; categorical
// attributes pass through unchanged.
using EvalLabel = std::map<std::string, int>;

inline int binarize_value(const AttributeSpec& attr, int value) {
    if (attr.kind == AttributeKind::Staged) return value == 0 ? 0 : 1;
    return value;
}

inline EvalLabel zero_label() {
    EvalLabel out;
    for (const AttributeSpec& attr : attribute_registry())
        out.emplace(std::string(attr.key), 0);
    return out;
}

// Throws on missing keys, unknown keys, or out-of-range values.
// eval_domains selects the post-binarization ranges.
inline void validate_label(const std::map<std::string, int>& label,
                           bool eval_domains = false) {
    for (const AttributeSpec& attr : attribute_registry()) {
        auto it = label.find(std::string(attr.key));
        if (it == label.end())
            throw data_error("label is missing key \"" +
                             std::string(attr.key) + "\"");
        int limit = eval_domains ? attr.eval_max() : attr.domain_max;
        if (it->second < 0 || it->second > limit)
            throw data_error("label value " + std::to_string(it->second) +
                             " out of range 0.." + std::to_string(limit) +
                             " for \"" + std::string(attr.key) + "\"");
    }
    for (const auto& [key, value] : label) {
        (void)value;
        if (find_attribute(key) == nullptr)
            throw data_error("label has unknown key \"" + key + "\"");
    }
}

inline EvalLabel binarize_label(const SceneLabel& label) {
    EvalLabel out;
    for (const AttributeSpec& attr : attribute_registry()) {
        auto it = label.find(std::string(attr.key));
        if (it == label.end())
            throw data_error("label is missing key \"" +
                             std::string(attr.key) + "\"");
        out.emplace(std::string(attr.key), binarize_value(attr, it->second));
    }
    return out;
}

// Serializes in registry order so emitted documents diff stably.
inline ordered_json label_to_json(const std::map<std::string, int>& label) {
    ordered_json out = ordered_json::object();
    for (const AttributeSpec& attr : attribute_registry()) {
        auto it = label.find(std::string(attr.key));
        if (it == label.end())
            throw data_error("label is missing key \"" +
                             std::string(attr.key) + "\"");
        out[std::string(attr.key)] = it->second;
    }
    return out;
}

inline std::map<std::string, int> label_from_json(const json& obj,
                                                  bool eval_domains = false) {
    if (!obj.is_object())
        throw data_error("label must be a JSON object");
    std::map<std::string, int> out;
    for (const auto& [key, value] : obj.items()) {
        if (!value.is_number_integer())
            throw data_error("label value for \"" + key +
                             "\" must be an integer");
        out.emplace(key, value.get<int>());
    }
    validate_label(out, eval_domains);
    return out;
}

enum class DiagnosticKind {
    // Recoverable under CoerceZero.
    MissingKey,
    UnknownKey,
    OutOfDomain,
    TypeCoerced,
    MultipleObjects,
    // Fatal: the record carries an all-zero label.
    NoJsonFound,
    UnparseableValue,
    ProviderError,
};

inline const char* diagnostic_kind_name(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::MissingKey: return "missing_key";
        case DiagnosticKind::UnknownKey: return "unknown_key";
        case DiagnosticKind::OutOfDomain: return "out_of_domain";
        case DiagnosticKind::TypeCoerced: return "type_coerced";
        case DiagnosticKind::MultipleObjects: return "multiple_objects";
        case DiagnosticKind::NoJsonFound: return "no_json_found";
        case DiagnosticKind::UnparseableValue: return "unparseable_value";
        case DiagnosticKind::ProviderError: return "provider_error";
    }
    return "unknown";
}

inline DiagnosticKind diagnostic_kind_from_name(std::string_view name) {
    static const std::pair<std::string_view, DiagnosticKind> table[] = {
        {"missing_key", DiagnosticKind::MissingKey},
        {"unknown_key", DiagnosticKind::UnknownKey},
        {"out_of_domain", DiagnosticKind::OutOfDomain},
        {"type_coerced", DiagnosticKind::TypeCoerced},
        {"multiple_objects", DiagnosticKind::MultipleObjects},
        {"no_json_found", DiagnosticKind::NoJsonFound},
        {"unparseable_value", DiagnosticKind::UnparseableValue},
        {"provider_error", DiagnosticKind::ProviderError},
    };
    for (const auto& [k, v] : table)
        if (k == name) return v;
    throw data_error("unknown diagnostic kind \"" + std::string(name) + "\"");
}

inline bool is_fatal(DiagnosticKind kind) {
    return kind == DiagnosticKind::NoJsonFound ||
           kind == DiagnosticKind::UnparseableValue ||
           kind == DiagnosticKind::ProviderError;
}

struct Diagnostic {
    DiagnosticKind kind;
    std::string key;     // affected attribute, empty when not key-specific
    std::string detail;  // free text, not part of any compatibility contract

    ordered_json to_json() const {
        ordered_json out = ordered_json::object();
        out["kind"] = diagnostic_kind_name(kind);
        if (!key.empty()) out["key"] = key;
        if (!detail.empty()) out["detail"] = detail;
        return out;
    }

    static Diagnostic from_json(const json& obj) {
        if (!obj.is_object() || !obj.contains("kind") ||
            !obj["kind"].is_string())
            throw data_error("diagnostic must be an object with a kind");
        Diagnostic d;
        d.kind = diagnostic_kind_from_name(obj["kind"].get<std::string>());
        if (obj.contains("key")) d.key = obj["key"].get<std::string>();
        if (obj.contains("detail")) d.detail = obj["detail"].get<std::string>();
        return d;
    }
};

// Machine-readable schema description, also the CLI `schema export` payload.
inline ordered_json schema_to_json() {
    ordered_json attrs = ordered_json::array();
    for (const AttributeSpec& attr : attribute_registry()) {
        ordered_json entry = ordered_json::object();
        entry["key"] = std::string(attr.key);
        entry["kind"] = attribute_kind_name(attr.kind);
        entry["domain"] = attr.domain();
        entry["eval_domain"] = attr.eval_domain();
        attrs.push_back(std::move(entry));
    }
    ordered_json out = ordered_json::object();
    out["attribute_count"] = kAttributeCount;
    out["attributes"] = std::move(attrs);
    return out;
}

}  // namespace scenebench
