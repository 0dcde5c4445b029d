#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenebench/metrics.hpp"
#include "scenebench/predictions.hpp"
#include "scenebench/schema.hpp"

namespace scenebench {

// Tie-break order for plurality votes: earlier ids win ties they take part
// in. Defaults to the run's configured provider order.
struct VotePolicy {
    std::vector<std::string> priority;
};

// Plurality over votes listed in priority order. On a tie among the top
// values, the earliest voter whose value is tied wins.
inline int vote_value(const std::vector<int>& votes_by_priority) {
    if (votes_by_priority.empty())
        throw internal_error("vote over zero voters");
    std::map<int, int> counts;
    for (int v : votes_by_priority) ++counts[v];
    int best = 0;
    for (const auto& [value, count] : counts) best = std::max(best, count);
    for (int v : votes_by_priority)
        if (counts[v] == best) return v;
    throw internal_error("vote fell through");  // unreachable
}

// Convenience form taking unordered votes plus an explicit priority list.
inline int vote_value(const std::map<std::string, int>& votes,
                      const VotePolicy& policy) {
    if (votes.size() != policy.priority.size())
        throw internal_error("priority list does not cover the voters");
    std::vector<int> ordered;
    ordered.reserve(policy.priority.size());
    for (const std::string& id : policy.priority) {
        auto it = votes.find(id);
        if (it == votes.end())
            throw internal_error("priority lists unknown voter \"" + id +
                                 "\"");
        ordered.push_back(it->second);
    }
    return vote_value(ordered);
}

inline std::string ensemble_name(const std::vector<std::string>& members) {
    std::string out = "vote(";
    for (size_t i = 0; i < members.size(); ++i) {
        if (i) out += '+';
        out += members[i];
    }
    out += ')';
    return out;
}

// All subsets of size >= min_size, each keeping the input (priority) order;
// listed smallest first, then by member position.
inline std::vector<std::vector<std::string>> enumerate_ensembles(
    const std::vector<std::string>& provider_ids, size_t min_size = 3) {
    if (min_size < 3)
        throw usage_error("ensembles need at least 3 members");
    if (provider_ids.size() > 20)
        throw usage_error("too many providers to enumerate ensembles");
    std::vector<std::vector<size_t>> index_sets;
    const size_t n = provider_ids.size();
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<size_t> indices;
        for (size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) indices.push_back(i);
        if (indices.size() >= min_size) index_sets.push_back(std::move(indices));
    }
    std::sort(index_sets.begin(), index_sets.end(),
              [](const auto& a, const auto& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });
    std::vector<std::vector<std::string>> out;
    out.reserve(index_sets.size());
    for (const auto& indices : index_sets) {
        std::vector<std::string> members;
        members.reserve(indices.size());
        for (size_t i : indices) members.push_back(provider_ids[i]);
        out.push_back(std::move(members));
    }
    return out;
}

// Votes attribute-wise over the members' stored labels (staged attributes
// are already collapsed to {0,1}); every member must cover the same frames.
// Fatal members still vote their all-zero labels.
inline std::vector<PredictionRecord> vote_predictions(
    const std::vector<std::string>& members,
    const std::map<std::string, std::vector<PredictionRecord>>& by_provider) {
    if (members.size() < 3)
        throw usage_error("ensembles need at least 3 members");
    std::vector<const std::vector<PredictionRecord>*> sets;
    for (const std::string& id : members) {
        auto it = by_provider.find(id);
        if (it == by_provider.end())
            throw data_error("no predictions for ensemble member \"" + id +
                             "\"");
        sets.push_back(&it->second);
    }
    std::vector<std::map<std::string, const PredictionRecord*>> by_frame(
        sets.size());
    for (size_t s = 0; s < sets.size(); ++s)
        for (const PredictionRecord& r : *sets[s])
            if (!by_frame[s].emplace(r.frame_id, &r).second)
                throw data_error("duplicate prediction for frame \"" +
                                 r.frame_id + "\" in \"" + members[s] + "\"");
    for (size_t s = 1; s < sets.size(); ++s)
        if (by_frame[s].size() != by_frame[0].size())
            throw data_error("ensemble members cover different frames");
    const std::string name = ensemble_name(members);
    std::vector<PredictionRecord> out;
    out.reserve(by_frame[0].size());
    for (const auto& [frame_id, first_record] : by_frame[0]) {
        (void)first_record;
        std::vector<const PredictionRecord*> row;
        for (size_t s = 0; s < sets.size(); ++s) {
            auto it = by_frame[s].find(frame_id);
            if (it == by_frame[s].end())
                throw data_error("member \"" + members[s] +
                                 "\" has no prediction for frame \"" +
                                 frame_id + "\"");
            row.push_back(it->second);
        }
        PredictionRecord voted;
        voted.frame_id = frame_id;
        voted.provider_id = name;
        std::vector<int> votes(row.size());
        for (const AttributeSpec& attr : attribute_registry()) {
            std::string key(attr.key);
            for (size_t s = 0; s < row.size(); ++s)
                votes[s] = row[s]->label.at(key);
            voted.label[key] = vote_value(votes);
        }
        out.push_back(std::move(voted));
    }
    return out;
}

struct DeltaReport {
    std::string baseline_provider;
    WeightedPRF macro_delta;
    WeightedPRF support_weighted_delta;
    // Registry order; per-attribute weighted metric deltas.
    std::vector<std::pair<std::string, WeightedPRF>> per_attribute;
};

// Baseline: best single provider by support-weighted F1; ties go to the
// lexicographically smaller id so reruns agree.
inline const RunSummary& pick_baseline(const std::vector<RunSummary>& singles) {
    if (singles.empty()) throw data_error("no single-provider metrics");
    const RunSummary* best = &singles.front();
    for (const RunSummary& s : singles) {
        double a = s.support_weighted_macro.f1;
        double b = best->support_weighted_macro.f1;
        if (a > b || (a == b && s.provider_id < best->provider_id)) best = &s;
    }
    return *best;
}

inline DeltaReport delta_vs_baseline(const RunSummary& ensemble,
                                     const RunSummary& baseline) {
    if (ensemble.per_attribute.size() != baseline.per_attribute.size())
        throw internal_error("summaries cover different attribute sets");
    DeltaReport out;
    out.baseline_provider = baseline.provider_id;
    out.macro_delta.precision =
        ensemble.macro.precision - baseline.macro.precision;
    out.macro_delta.recall = ensemble.macro.recall - baseline.macro.recall;
    out.macro_delta.f1 = ensemble.macro.f1 - baseline.macro.f1;
    out.support_weighted_delta.precision =
        ensemble.support_weighted_macro.precision -
        baseline.support_weighted_macro.precision;
    out.support_weighted_delta.recall =
        ensemble.support_weighted_macro.recall -
        baseline.support_weighted_macro.recall;
    out.support_weighted_delta.f1 = ensemble.support_weighted_macro.f1 -
                                    baseline.support_weighted_macro.f1;
    for (size_t i = 0; i < ensemble.per_attribute.size(); ++i) {
        const auto& [key, em] = ensemble.per_attribute[i];
        const auto& [bkey, bm] = baseline.per_attribute[i];
        if (key != bkey)
            throw internal_error("attribute order differs between summaries");
        WeightedPRF d;
        d.precision = em.weighted.precision - bm.weighted.precision;
        d.recall = em.weighted.recall - bm.weighted.recall;
        d.f1 = em.weighted.f1 - bm.weighted.f1;
        out.per_attribute.emplace_back(key, d);
    }
    return out;
}

inline ordered_json delta_report_to_json(const DeltaReport& report) {
    ordered_json out = ordered_json::object();
    out["baseline_provider"] = report.baseline_provider;
    out["macro"] = prf_to_json(report.macro_delta);
    out["support_weighted_macro"] = prf_to_json(report.support_weighted_delta);
    ordered_json per_attr = ordered_json::object();
    for (const auto& [key, d] : report.per_attribute)
        per_attr[key] = prf_to_json(d);
    out["per_attribute"] = std::move(per_attr);
    return out;
}

inline DeltaReport delta_report_from_json(const json& obj) {
    DeltaReport out;
    out.baseline_provider = obj.at("baseline_provider").get<std::string>();
    out.macro_delta = prf_from_json(obj.at("macro"));
    out.support_weighted_delta =
        prf_from_json(obj.at("support_weighted_macro"));
    for (const AttributeSpec& attr : attribute_registry()) {
        std::string key(attr.key);
        out.per_attribute.emplace_back(
            key, prf_from_json(obj.at("per_attribute").at(key)));
    }
    return out;
}

}  // namespace scenebench
