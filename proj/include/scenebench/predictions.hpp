#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scenebench/detail/fsio.hpp"
#include "scenebench/schema.hpp"

namespace scenebench {

struct PredictionRecord {
    std::string frame_id;
    std::string provider_id;
    std::string raw_text;
    EvalLabel label;  // all-zero when a fatal diagnostic is present
    std::vector<Diagnostic> diagnostics;
    int64_t latency_ms = 0;
    bool from_cache = false;
};

inline bool is_fatal(const PredictionRecord& record) {
    for (const Diagnostic& d : record.diagnostics)
        if (is_fatal(d.kind)) return true;
    return false;
}

struct PredictionSet {
    std::string provider_id;
    std::vector<PredictionRecord> records;  // at most one per frame
};

inline ordered_json prediction_to_json(const PredictionRecord& record) {
    ordered_json out = ordered_json::object();
    out["frame_id"] = record.frame_id;
    out["provider_id"] = record.provider_id;
    out["raw_text"] = record.raw_text;
    out["label"] = label_to_json(record.label);
    ordered_json diags = ordered_json::array();
    for (const Diagnostic& d : record.diagnostics) diags.push_back(d.to_json());
    out["diagnostics"] = std::move(diags);
    out["latency_ms"] = record.latency_ms;
    out["from_cache"] = record.from_cache;
    return out;
}

inline PredictionRecord prediction_from_json(const json& obj) {
    if (!obj.is_object())
        throw data_error("prediction record must be a JSON object");
    for (const char* field :
         {"frame_id", "provider_id", "raw_text", "label", "diagnostics",
          "latency_ms", "from_cache"})
        if (!obj.contains(field))
            throw data_error(std::string("prediction record is missing \"") +
                             field + "\"");
    PredictionRecord record;
    record.frame_id = obj["frame_id"].get<std::string>();
    record.provider_id = obj["provider_id"].get<std::string>();
    record.raw_text = obj["raw_text"].get<std::string>();
    record.label = label_from_json(obj["label"], /*eval_domains=*/true);
    for (const json& d : obj["diagnostics"])
        record.diagnostics.push_back(Diagnostic::from_json(d));
    if (!obj["latency_ms"].is_number())
        throw data_error("latency_ms must be a number");
    record.latency_ms =
        static_cast<int64_t>(std::llround(obj["latency_ms"].get<double>()));
    record.from_cache = obj["from_cache"].get<bool>();
    return record;
}

inline std::string predictions_to_jsonl(
    const std::vector<PredictionRecord>& records) {
    std::string out;
    for (const PredictionRecord& record : records) {
        out += prediction_to_json(record).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<PredictionRecord> read_predictions(
    const std::filesystem::path& path) {
    std::string content = detail::read_file(path);
    std::vector<PredictionRecord> out;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t nl = content.find('\n', pos);
        std::string_view line(content.data() + pos,
                              (nl == std::string::npos ? content.size() : nl) -
                                  pos);
        ++line_no;
        pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded())
            throw data_error(path.string() + ":" + std::to_string(line_no) +
                             ": invalid JSON");
        try {
            out.push_back(prediction_from_json(obj));
        } catch (const Error& e) {
            throw data_error(path.string() + ":" + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return out;
}

inline void write_predictions(const std::filesystem::path& path,
                              const std::vector<PredictionRecord>& records) {
    detail::write_file_atomic(path, predictions_to_jsonl(records));
}

}  // namespace scenebench
