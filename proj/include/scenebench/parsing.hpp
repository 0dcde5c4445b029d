#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scenebench/schema.hpp"

namespace scenebench {

struct CoercionPolicy {
    enum class Mode { Strict, CoerceZero };
    Mode mode = Mode::CoerceZero;
    bool accept_string_integers = true;
};

// First balanced top-level {...} region that parses as JSON. `multiple` is
// set when a second parseable object follows; the first one wins.
struct ExtractedJson {
    std::string text;
    bool multiple = false;
};

namespace detail {

// Returns one past the closing brace of the object opening at `open`, or
// npos when the text ends before it balances. String-aware: braces inside
// quoted strings do not count.
inline size_t scan_balanced_object(std::string_view s, size_t open) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace detail

inline std::optional<ExtractedJson> extract_json(std::string_view raw) {
    std::optional<ExtractedJson> found;
    size_t pos = 0;
    while (pos < raw.size()) {
        size_t open = raw.find('{', pos);
        if (open == std::string_view::npos) break;
        size_t end = detail::scan_balanced_object(raw, open);
        if (end == std::string_view::npos) {
            pos = open + 1;
            continue;
        }
        std::string_view candidate = raw.substr(open, end - open);
        json parsed = json::parse(candidate, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            pos = open + 1;
            continue;
        }
        if (!found) {
            found = ExtractedJson{std::string(candidate), false};
            pos = end;
        } else {
            found->multiple = true;
            break;
        }
    }
    return found;
}

struct ParseOutcome {
    EvalLabel label;  // all-zero when fatal
    std::vector<Diagnostic> diagnostics;
    bool fatal = false;
};

namespace detail {

enum class ValueClass { Integer, Coerced, Unparseable };

struct ClassifiedValue {
    ValueClass cls = ValueClass::Unparseable;
    long long value = 0;
};

inline ClassifiedValue classify_value(const json& v,
                                      bool accept_string_integers) {
    if (v.is_number_integer()) {
        if (v.is_number_unsigned() &&
            v.get<uint64_t>() >
                static_cast<uint64_t>(std::numeric_limits<long long>::max()))
            return {ValueClass::Integer, std::numeric_limits<long long>::max()};
        return {ValueClass::Integer, v.get<long long>()};
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (std::isfinite(d) && std::trunc(d) == d && std::fabs(d) <= 1e15)
            return {ValueClass::Coerced, static_cast<long long>(d)};
        return {};
    }
    if (v.is_string() && accept_string_integers) {
        std::string_view s = v.get_ref<const std::string&>();
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
            s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
            s.remove_suffix(1);
        if (s.empty()) return {};
        long long parsed = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), parsed);
        if (ec != std::errc() || ptr != s.data() + s.size()) return {};
        return {ValueClass::Coerced, parsed};
    }
    return {};
}

}  // namespace detail

// Applies the coercion policy to an extracted object. CoerceZero repairs
// recoverable deviations and records each one; an unparseable value is fatal
// in both modes. Strict additionally makes any deviation fatal, except
// string-integer coercion when accept_string_integers opts in.
inline ParseOutcome coerce_label(const json& obj,
                                 const CoercionPolicy& policy = {}) {
    ParseOutcome out;
    bool strict_violation = false;
    for (const AttributeSpec& attr : attribute_registry()) {
        std::string key(attr.key);
        auto it = obj.find(key);
        if (it == obj.end()) {
            out.diagnostics.push_back({DiagnosticKind::MissingKey, key,
                                       "key absent, scored as not detected"});
            out.label[key] = 0;
            strict_violation = true;
            continue;
        }
        auto cv = detail::classify_value(*it, policy.accept_string_integers);
        if (cv.cls == detail::ValueClass::Unparseable) {
            out.diagnostics.push_back(
                {DiagnosticKind::UnparseableValue, key,
                 "value cannot be read as an integer: " + it->dump()});
            out.label = zero_label();
            out.fatal = true;
            return out;
        }
        if (cv.cls == detail::ValueClass::Coerced) {
            out.diagnostics.push_back({DiagnosticKind::TypeCoerced, key,
                                       "coerced " + it->dump() + " to " +
                                           std::to_string(cv.value)});
            if (!it->is_string()) strict_violation = true;
        }
        long long value = cv.value;
        if (!attr.in_domain(value)) {
            out.diagnostics.push_back(
                {DiagnosticKind::OutOfDomain, key,
                 "value " + std::to_string(value) + " outside 0.." +
                     std::to_string(attr.domain_max) + ", scored 0"});
            value = 0;
            strict_violation = true;
        }
        out.label[key] = static_cast<int>(value);
    }
    std::vector<std::string> unknown;
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (find_attribute(key) == nullptr) unknown.push_back(key);
    }
    std::sort(unknown.begin(), unknown.end());
    for (const std::string& key : unknown) {
        out.diagnostics.push_back(
            {DiagnosticKind::UnknownKey, key, "not a schema key, dropped"});
        strict_violation = true;
    }
    if (policy.mode == CoercionPolicy::Mode::Strict && strict_violation) {
        out.label = zero_label();
        out.fatal = true;
        return out;
    }
    // Result is a valid raw-domain label; binarization happens at
    // parse_response so voting and scoring see the collapsed stages.
    return out;
}

// Never throws on malformed model text: failures become fatal diagnostics on
// an all-zero label.
inline ParseOutcome parse_response(std::string_view raw_text,
                                   const CoercionPolicy& policy = {}) {
    auto extracted = extract_json(raw_text);
    if (!extracted) {
        ParseOutcome out;
        out.label = zero_label();
        out.diagnostics.push_back({DiagnosticKind::NoJsonFound, "",
                                   "no balanced JSON object in response"});
        out.fatal = true;
        return out;
    }
    json obj = json::parse(extracted->text, nullptr, false);
    ParseOutcome out = coerce_label(obj, policy);
    if (!out.fatal) out.label = binarize_label(out.label);
    if (extracted->multiple)
        out.diagnostics.insert(
            out.diagnostics.begin(),
            {DiagnosticKind::MultipleObjects, "",
             "response contains more than one JSON object, first used"});
    return out;
}

}  // namespace scenebench
