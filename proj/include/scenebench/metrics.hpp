#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "scenebench/dataset.hpp"
#include "scenebench/predictions.hpp"
#include "scenebench/schema.hpp"

namespace scenebench {

inline double safe_div(double num, double den) {
    return den == 0.0 ? 0.0 : num / den;
}

struct ConfusionMatrix {
    // counts[truth][pred]
    std::vector<std::vector<int64_t>> counts;

    explicit ConfusionMatrix(size_t classes = 0)
        : counts(classes, std::vector<int64_t>(classes, 0)) {}

    size_t size() const { return counts.size(); }
    void add(int truth, int pred) {
        counts[static_cast<size_t>(truth)][static_cast<size_t>(pred)] += 1;
    }
    int64_t row_total(size_t truth) const {
        int64_t total = 0;
        for (int64_t v : counts[truth]) total += v;
        return total;
    }
    int64_t col_total(size_t pred) const {
        int64_t total = 0;
        for (const auto& row : counts) total += row[pred];
        return total;
    }
};

struct PerClassMetrics {
    int value = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t support = 0;  // truth count for this class
};

struct WeightedPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct AttributeMetrics {
    AttributeKind kind = AttributeKind::Categorical;
    std::vector<int> domain;
    ConfusionMatrix confusion;
    std::vector<PerClassMetrics> per_class;
    WeightedPRF weighted;  // per-class metrics weighted by truth support
    int64_t total_support = 0;
};

// Scores one attribute over aligned truth/prediction columns. Zero
// denominators (empty class, no predictions for a class) score 0.
inline AttributeMetrics score_attribute(const AttributeSpec& attr,
                                        const std::vector<int>& truths,
                                        const std::vector<int>& preds) {
    if (truths.size() != preds.size())
        throw internal_error("truth/prediction columns differ in length");
    AttributeMetrics out;
    out.kind = attr.kind;
    out.domain = attr.eval_domain();
    out.confusion = ConfusionMatrix(out.domain.size());
    for (size_t i = 0; i < truths.size(); ++i)
        out.confusion.add(truths[i], preds[i]);
    double weighted_p = 0.0, weighted_r = 0.0, weighted_f = 0.0;
    for (size_t c = 0; c < out.domain.size(); ++c) {
        int64_t tp = out.confusion.counts[c][c];
        int64_t support = out.confusion.row_total(c);
        int64_t predicted = out.confusion.col_total(c);
        PerClassMetrics pc;
        pc.value = out.domain[c];
        pc.support = support;
        pc.precision = safe_div(static_cast<double>(tp),
                                static_cast<double>(predicted));
        pc.recall =
            safe_div(static_cast<double>(tp), static_cast<double>(support));
        pc.f1 = safe_div(2.0 * pc.precision * pc.recall,
                         pc.precision + pc.recall);
        weighted_p += static_cast<double>(support) * pc.precision;
        weighted_r += static_cast<double>(support) * pc.recall;
        weighted_f += static_cast<double>(support) * pc.f1;
        out.total_support += support;
        out.per_class.push_back(pc);
    }
    out.weighted.precision =
        safe_div(weighted_p, static_cast<double>(out.total_support));
    out.weighted.recall =
        safe_div(weighted_r, static_cast<double>(out.total_support));
    out.weighted.f1 =
        safe_div(weighted_f, static_cast<double>(out.total_support));
    return out;
}

struct RunSummary {
    std::string provider_id;
    int64_t frames_scored = 0;
    int64_t fatal_records = 0;
    std::string fatal_handling;  // "score_zero" or "exclude"
    // Registry order.
    std::vector<std::pair<std::string, AttributeMetrics>> per_attribute;
    WeightedPRF macro;                  // unweighted mean over attributes
    WeightedPRF support_weighted_macro; // weighted by attribute total support
};

inline RunSummary summarize(const std::string& provider_id,
                            const std::vector<EvalLabel>& truths,
                            const std::vector<EvalLabel>& preds,
                            int64_t fatal_records,
                            const std::string& fatal_handling) {
    if (truths.size() != preds.size())
        throw internal_error("truth/prediction sets differ in length");
    RunSummary out;
    out.provider_id = provider_id;
    out.frames_scored = static_cast<int64_t>(truths.size());
    out.fatal_records = fatal_records;
    out.fatal_handling = fatal_handling;
    double sw_p = 0.0, sw_r = 0.0, sw_f = 0.0;
    int64_t sw_total = 0;
    for (const AttributeSpec& attr : attribute_registry()) {
        std::string key(attr.key);
        std::vector<int> truth_col(truths.size()), pred_col(preds.size());
        for (size_t i = 0; i < truths.size(); ++i) {
            truth_col[i] = truths[i].at(key);
            pred_col[i] = preds[i].at(key);
        }
        AttributeMetrics m = score_attribute(attr, truth_col, pred_col);
        out.macro.precision += m.weighted.precision;
        out.macro.recall += m.weighted.recall;
        out.macro.f1 += m.weighted.f1;
        sw_p += static_cast<double>(m.total_support) * m.weighted.precision;
        sw_r += static_cast<double>(m.total_support) * m.weighted.recall;
        sw_f += static_cast<double>(m.total_support) * m.weighted.f1;
        sw_total += m.total_support;
        out.per_attribute.emplace_back(std::move(key), std::move(m));
    }
    double n = static_cast<double>(kAttributeCount);
    out.macro.precision /= n;
    out.macro.recall /= n;
    out.macro.f1 /= n;
    out.support_weighted_macro.precision =
        safe_div(sw_p, static_cast<double>(sw_total));
    out.support_weighted_macro.recall =
        safe_div(sw_r, static_cast<double>(sw_total));
    out.support_weighted_macro.f1 =
        safe_div(sw_f, static_cast<double>(sw_total));
    return out;
}

struct EvalOptions {
    bool exclude_fatal = false;  // drop fatal records instead of scoring zeros
};

// Aligns predictions with the manifest's active frames; both directions must
// match exactly. Truth and stored labels are both run through binarization
// (idempotent for already collapsed labels).
inline RunSummary evaluate_provider(const DatasetManifest& manifest,
                                    const std::vector<PredictionRecord>& records,
                                    const EvalOptions& options = {}) {
    if (records.empty()) throw data_error("no prediction records to evaluate");
    const std::string provider_id = records.front().provider_id;
    std::map<std::string, const PredictionRecord*> by_frame;
    for (const PredictionRecord& r : records) {
        if (r.provider_id != provider_id)
            throw data_error("prediction set mixes providers \"" +
                             provider_id + "\" and \"" + r.provider_id + "\"");
        if (!by_frame.emplace(r.frame_id, &r).second)
            throw data_error("duplicate prediction for frame \"" + r.frame_id +
                             "\"");
    }
    auto active = manifest.active_frames();
    if (by_frame.size() != active.size())
        throw data_error(
            "prediction set covers " + std::to_string(by_frame.size()) +
            " frames but the manifest has " + std::to_string(active.size()) +
            " active frames");
    std::vector<EvalLabel> truths, preds;
    int64_t fatal_records = 0;
    for (const FrameEntry* frame : active) {
        auto it = by_frame.find(frame->frame_id);
        if (it == by_frame.end())
            throw data_error("no prediction for frame \"" + frame->frame_id +
                             "\"");
        const PredictionRecord& record = *it->second;
        bool fatal = is_fatal(record);
        if (fatal) ++fatal_records;
        if (fatal && options.exclude_fatal) continue;
        truths.push_back(binarize_label(frame->truth));
        preds.push_back(binarize_label(record.label));
    }
    return summarize(provider_id, truths, preds, fatal_records,
                     options.exclude_fatal ? "exclude" : "score_zero");
}

inline ordered_json prf_to_json(const WeightedPRF& prf) {
    ordered_json out = ordered_json::object();
    out["precision"] = prf.precision;
    out["recall"] = prf.recall;
    out["f1"] = prf.f1;
    return out;
}

inline WeightedPRF prf_from_json(const json& obj) {
    WeightedPRF out;
    out.precision = obj.at("precision").get<double>();
    out.recall = obj.at("recall").get<double>();
    out.f1 = obj.at("f1").get<double>();
    return out;
}

// Full-precision doubles: parsing the document reproduces the in-memory
// values exactly.
inline ordered_json run_summary_to_json(const RunSummary& summary) {
    ordered_json out = ordered_json::object();
    out["provider_id"] = summary.provider_id;
    out["frames_scored"] = summary.frames_scored;
    out["fatal_records"] = summary.fatal_records;
    out["fatal_handling"] = summary.fatal_handling;
    ordered_json per_attr = ordered_json::object();
    for (const auto& [key, m] : summary.per_attribute) {
        ordered_json entry = ordered_json::object();
        entry["kind"] = attribute_kind_name(m.kind);
        entry["domain"] = m.domain;
        entry["confusion"] = m.confusion.counts;
        ordered_json per_class = ordered_json::array();
        for (const PerClassMetrics& pc : m.per_class) {
            ordered_json row = ordered_json::object();
            row["value"] = pc.value;
            row["precision"] = pc.precision;
            row["recall"] = pc.recall;
            row["f1"] = pc.f1;
            row["support"] = pc.support;
            per_class.push_back(std::move(row));
        }
        entry["per_class"] = std::move(per_class);
        entry["weighted"] = prf_to_json(m.weighted);
        per_attr[key] = std::move(entry);
    }
    out["per_attribute"] = std::move(per_attr);
    out["macro"] = prf_to_json(summary.macro);
    out["support_weighted_macro"] = prf_to_json(summary.support_weighted_macro);
    return out;
}

inline RunSummary run_summary_from_json(const json& obj) {
    RunSummary out;
    out.provider_id = obj.at("provider_id").get<std::string>();
    out.frames_scored = obj.at("frames_scored").get<int64_t>();
    out.fatal_records = obj.at("fatal_records").get<int64_t>();
    out.fatal_handling = obj.at("fatal_handling").get<std::string>();
    const json& per_attr = obj.at("per_attribute");
    for (const AttributeSpec& attr : attribute_registry()) {
        std::string key(attr.key);
        if (!per_attr.contains(key))
            throw data_error("metrics document is missing attribute \"" + key +
                             "\"");
        const json& entry = per_attr.at(key);
        AttributeMetrics m;
        m.kind = entry.at("kind").get<std::string>() == "staged"
                     ? AttributeKind::Staged
                     : AttributeKind::Categorical;
        m.domain = entry.at("domain").get<std::vector<int>>();
        m.confusion.counts =
            entry.at("confusion").get<std::vector<std::vector<int64_t>>>();
        for (const json& row : entry.at("per_class")) {
            PerClassMetrics pc;
            pc.value = row.at("value").get<int>();
            pc.precision = row.at("precision").get<double>();
            pc.recall = row.at("recall").get<double>();
            pc.f1 = row.at("f1").get<double>();
            pc.support = row.at("support").get<int64_t>();
            m.total_support += pc.support;
            m.per_class.push_back(pc);
        }
        m.weighted = prf_from_json(entry.at("weighted"));
        out.per_attribute.emplace_back(std::move(key), std::move(m));
    }
    out.macro = prf_from_json(obj.at("macro"));
    out.support_weighted_macro = prf_from_json(obj.at("support_weighted_macro"));
    return out;
}

}  // namespace scenebench
