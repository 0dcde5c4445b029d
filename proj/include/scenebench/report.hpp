#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "scenebench/detail/fsio.hpp"
#include "scenebench/ensemble.hpp"
#include "scenebench/metrics.hpp"
#include "scenebench/version.hpp"

namespace scenebench {

enum class ChartKind { Radar, GroupedBar, DeltaBar };

inline const char* chart_kind_name(ChartKind kind) {
    switch (kind) {
        case ChartKind::Radar: return "radar";
        case ChartKind::GroupedBar: return "grouped_bar";
        case ChartKind::DeltaBar: return "delta_bar";
    }
    return "radar";
}

enum class Metric { Precision, Recall, F1 };

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Precision: return "precision";
        case Metric::Recall: return "recall";
        case Metric::F1: return "f1";
    }
    return "f1";
}

inline Metric metric_from_name(std::string_view name) {
    if (name == "precision") return Metric::Precision;
    if (name == "recall") return Metric::Recall;
    if (name == "f1") return Metric::F1;
    throw usage_error("unknown metric \"" + std::string(name) +
                      "\" (expected precision, recall, or f1)");
}

inline double pick_metric(const WeightedPRF& prf, Metric m) {
    switch (m) {
        case Metric::Precision: return prf.precision;
        case Metric::Recall: return prf.recall;
        case Metric::F1: return prf.f1;
    }
    return prf.f1;
}

struct ChartSeries {
    std::string name;
    std::vector<double> values;  // aligned to axes
};

struct ChartSpec {
    std::string chart_id;
    ChartKind kind = ChartKind::Radar;
    std::string title;
    std::vector<std::string> axes;
    std::vector<ChartSeries> series;
};

// One series per provider; 21 axes in registry order; values are the
// per-attribute support-weighted metric.
inline ChartSpec radar_chart_data(const std::vector<RunSummary>& summaries,
                                  Metric metric) {
    if (summaries.empty())
        throw data_error("radar chart needs at least one summary");
    ChartSpec spec;
    spec.chart_id = std::string("per_attribute_") + metric_name(metric) +
                    "_radar";
    spec.kind = ChartKind::Radar;
    spec.title = std::string("Per-attribute weighted ") + metric_name(metric);
    for (const AttributeSpec& attr : attribute_registry())
        spec.axes.emplace_back(attr.key);
    for (const RunSummary& summary : summaries) {
        ChartSeries series;
        series.name = summary.provider_id;
        for (const auto& [key, m] : summary.per_attribute) {
            (void)key;
            series.values.push_back(pick_metric(m.weighted, metric));
        }
        spec.series.push_back(std::move(series));
    }
    return spec;
}

// Overall precision/recall/f1 side by side, one series per summary.
inline ChartSpec summary_chart_data(const std::vector<RunSummary>& summaries) {
    if (summaries.empty())
        throw data_error("summary chart needs at least one summary");
    ChartSpec spec;
    spec.chart_id = "overall_prf_bar";
    spec.kind = ChartKind::GroupedBar;
    spec.title = "Support-weighted macro metrics";
    spec.axes = {"precision", "recall", "f1"};
    for (const RunSummary& summary : summaries) {
        ChartSeries series;
        series.name = summary.provider_id;
        series.values = {summary.support_weighted_macro.precision,
                         summary.support_weighted_macro.recall,
                         summary.support_weighted_macro.f1};
        spec.series.push_back(std::move(series));
    }
    return spec;
}

// One series per ensemble of per-attribute (ensemble - baseline) values;
// the zero line separates repairs from regressions.
inline ChartSpec delta_chart_data(
    const std::vector<std::pair<std::string, DeltaReport>>& deltas,
    Metric metric) {
    if (deltas.empty())
        throw data_error("delta chart needs at least one ensemble");
    ChartSpec spec;
    spec.chart_id = std::string("ensemble_") + metric_name(metric) +
                    "_delta_bar";
    spec.kind = ChartKind::DeltaBar;
    spec.title = std::string("Ensemble ") + metric_name(metric) +
                 " delta vs baseline " + deltas.front().second.baseline_provider;
    for (const AttributeSpec& attr : attribute_registry())
        spec.axes.emplace_back(attr.key);
    for (const auto& [name, report] : deltas) {
        ChartSeries series;
        series.name = name;
        for (const auto& [key, d] : report.per_attribute) {
            (void)key;
            series.values.push_back(pick_metric(d, metric));
        }
        spec.series.push_back(std::move(series));
    }
    return spec;
}

namespace detail {

inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string fmt2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline const char* series_color(size_t index) {
    static constexpr const char* palette[] = {
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
        "#8c564b", "#17becf", "#e377c2", "#7f7f7f", "#bcbd22",
    };
    return palette[index % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

inline void validate_chart(const ChartSpec& spec) {
    for (const ChartSeries& series : spec.series)
        if (series.values.size() != spec.axes.size())
            throw internal_error("series \"" + series.name +
                                 "\" does not align with the chart axes");
}

// Chart values are rounded to 6 decimals in every emitted format so reruns
// and platforms diff cleanly; full precision lives in the metrics documents.
inline ordered_json chart_to_json(const ChartSpec& spec) {
    validate_chart(spec);
    ordered_json out = ordered_json::object();
    out["chart_id"] = spec.chart_id;
    out["kind"] = chart_kind_name(spec.kind);
    out["title"] = spec.title;
    out["axes"] = spec.axes;
    ordered_json series = ordered_json::array();
    for (const ChartSeries& s : spec.series) {
        ordered_json entry = ordered_json::object();
        entry["name"] = s.name;
        ordered_json values = ordered_json::array();
        for (double v : s.values) values.push_back(detail::round6(v));
        entry["values"] = std::move(values);
        series.push_back(std::move(entry));
    }
    out["series"] = std::move(series);
    return out;
}

// Long form: one row per (series, axis) pair.
inline std::string chart_to_csv(const ChartSpec& spec) {
    validate_chart(spec);
    std::string out = "series,axis,value\n";
    auto quote = [](const std::string& field) {
        if (field.find_first_of(",\"\n") == std::string::npos) return field;
        std::string quoted = "\"";
        for (char c : field) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    };
    for (const ChartSeries& s : spec.series)
        for (size_t i = 0; i < spec.axes.size(); ++i) {
            out += quote(s.name);
            out += ',';
            out += quote(spec.axes[i]);
            out += ',';
            out += detail::fmt6(s.values[i]);
            out += '\n';
        }
    return out;
}

namespace detail {

inline std::string svg_radar(const ChartSpec& spec) {
    const double cx = 360, cy = 370, radius = 270;
    const double pi = std::acos(-1.0);
    const size_t n = spec.axes.size();
    auto point = [&](size_t axis, double value) {
        double angle = 2.0 * pi * static_cast<double>(axis) /
                           static_cast<double>(n) -
                       pi / 2.0;
        double r = radius * std::min(std::max(value, 0.0), 1.0);
        return std::pair<double, double>(cx + r * std::cos(angle),
                                         cy + r * std::sin(angle));
    };
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"980\" "
        "height=\"760\" viewBox=\"0 0 980 760\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"980\" height=\"760\" fill=\"white\"/>\n";
    svg += "<text x=\"20\" y=\"28\" font-size=\"16\">" +
           xml_escape(spec.title) + "</text>\n";
    for (double ring : {0.25, 0.5, 0.75, 1.0}) {
        svg += "<polygon fill=\"none\" stroke=\"#cccccc\" points=\"";
        for (size_t a = 0; a < n; ++a) {
            auto [x, y] = point(a, ring);
            svg += fmt2(x) + "," + fmt2(y) + " ";
        }
        svg += "\"/>\n";
    }
    for (size_t a = 0; a < n; ++a) {
        auto [x, y] = point(a, 1.0);
        svg += "<line x1=\"" + fmt2(cx) + "\" y1=\"" + fmt2(cy) + "\" x2=\"" +
               fmt2(x) + "\" y2=\"" + fmt2(y) +
               "\" stroke=\"#dddddd\"/>\n";
        auto [lx, ly] = point(a, 1.09);
        std::string anchor = lx < cx - 5 ? "end"
                             : lx > cx + 5 ? "start"
                                           : "middle";
        svg += "<text x=\"" + fmt2(lx) + "\" y=\"" + fmt2(ly) +
               "\" font-size=\"9\" text-anchor=\"" + anchor + "\">" +
               xml_escape(spec.axes[a]) + "</text>\n";
    }
    for (size_t s = 0; s < spec.series.size(); ++s) {
        const ChartSeries& series = spec.series[s];
        svg += std::string("<polygon fill=\"") + series_color(s) +
               "\" fill-opacity=\"0.08\" stroke=\"" + series_color(s) +
               "\" stroke-width=\"1.5\" points=\"";
        for (size_t a = 0; a < n; ++a) {
            auto [x, y] = point(a, round6(series.values[a]));
            svg += fmt2(x) + "," + fmt2(y) + " ";
        }
        svg += "\"/>\n";
    }
    for (size_t s = 0; s < spec.series.size(); ++s) {
        double y = 60 + 20 * static_cast<double>(s);
        svg += std::string("<rect x=\"760\" y=\"") + fmt2(y - 10) +
               "\" width=\"12\" height=\"12\" fill=\"" + series_color(s) +
               "\"/>\n";
        svg += "<text x=\"778\" y=\"" + fmt2(y) + "\" font-size=\"11\">" +
               xml_escape(spec.series[s].name) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

inline std::string svg_bars(const ChartSpec& spec) {
    const double width = 980, height = 560;
    const double left = 70, right = 180, top = 50, bottom = 120;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    double lo = 0.0, hi = 1.0;
    for (const ChartSeries& s : spec.series)
        for (double v : s.values) {
            lo = std::min(lo, round6(v));
            hi = std::max(hi, round6(v));
        }
    if (hi == lo) hi = lo + 1.0;
    auto y_of = [&](double v) {
        return top + plot_h * (hi - v) / (hi - lo);
    };
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"980\" "
        "height=\"560\" viewBox=\"0 0 980 560\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"980\" height=\"560\" fill=\"white\"/>\n";
    svg += "<text x=\"20\" y=\"28\" font-size=\"16\">" +
           xml_escape(spec.title) + "</text>\n";
    const size_t groups = spec.axes.size();
    const size_t per_group = spec.series.size();
    const double group_w = plot_w / static_cast<double>(groups);
    const double bar_w =
        group_w * 0.8 / static_cast<double>(per_group);
    for (double tick : {lo, (lo + hi) / 2.0, hi, 0.0}) {
        if (tick < lo || tick > hi) continue;
        double y = y_of(tick);
        svg += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
               fmt2(left + plot_w) + "\" y2=\"" + fmt2(y) +
               "\" stroke=\"" + (tick == 0.0 ? "#888888" : "#dddddd") +
               "\"/>\n";
        svg += "<text x=\"" + fmt2(left - 8) + "\" y=\"" + fmt2(y + 3) +
               "\" font-size=\"10\" text-anchor=\"end\">" + fmt2(tick) +
               "</text>\n";
    }
    for (size_t g = 0; g < groups; ++g) {
        double gx = left + group_w * (static_cast<double>(g) + 0.1);
        for (size_t s = 0; s < per_group; ++s) {
            double v = round6(spec.series[s].values[g]);
            double y0 = y_of(std::max(v, 0.0));
            double y1 = y_of(std::min(v, 0.0));
            svg += std::string("<rect x=\"") +
                   fmt2(gx + bar_w * static_cast<double>(s)) + "\" y=\"" +
                   fmt2(y0) + "\" width=\"" + fmt2(bar_w * 0.9) +
                   "\" height=\"" + fmt2(std::max(y1 - y0, 0.5)) +
                   "\" fill=\"" + series_color(s) + "\"/>\n";
        }
        double lx = left + group_w * (static_cast<double>(g) + 0.5);
        svg += "<text font-size=\"9\" text-anchor=\"end\" transform=\"rotate("
               "-40 " + fmt2(lx) + " " + fmt2(height - bottom + 16) + ")\" x=\"" +
               fmt2(lx) + "\" y=\"" + fmt2(height - bottom + 16) + "\">" +
               xml_escape(spec.axes[g]) + "</text>\n";
    }
    for (size_t s = 0; s < per_group; ++s) {
        double y = 60 + 20 * static_cast<double>(s);
        svg += std::string("<rect x=\"") + fmt2(width - right + 20) +
               "\" y=\"" + fmt2(y - 10) +
               "\" width=\"12\" height=\"12\" fill=\"" + series_color(s) +
               "\"/>\n";
        svg += "<text x=\"" + fmt2(width - right + 38) + "\" y=\"" + fmt2(y) +
               "\" font-size=\"11\">" + xml_escape(spec.series[s].name) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

inline std::string chart_to_svg(const ChartSpec& spec) {
    validate_chart(spec);
    return spec.kind == ChartKind::Radar ? detail::svg_radar(spec)
                                         : detail::svg_bars(spec);
}

// Writes charts/<chart_id>.{json,csv,svg} under the run directory.
inline void emit_chart(const std::filesystem::path& run_dir,
                       const ChartSpec& spec) {
    std::filesystem::path dir = run_dir / "charts";
    detail::write_file_atomic(dir / (spec.chart_id + ".json"),
                              chart_to_json(spec).dump(1) + "\n");
    detail::write_file_atomic(dir / (spec.chart_id + ".csv"),
                              chart_to_csv(spec));
    detail::write_file_atomic(dir / (spec.chart_id + ".svg"),
                              chart_to_svg(spec));
}

// SOURCE_DATE_EPOCH pins the clock for reproducible outputs.
inline std::string timestamp_utc() {
    std::time_t t;
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    if (epoch != nullptr && *epoch != '\0')
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
        t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// run_meta.json accumulates one entry per pipeline step, newest write wins
// per step; tool identity and prompt digest sit at the top level.
inline void update_run_meta(const std::filesystem::path& run_dir,
                            const std::string& step,
                            const ordered_json& payload,
                            const std::string& prompt_sha256) {
    std::filesystem::path path = run_dir / "run_meta.json";
    ordered_json meta = ordered_json::object();
    if (std::filesystem::exists(path)) {
        ordered_json existing =
            ordered_json::parse(detail::read_file(path), nullptr, false);
        if (!existing.is_discarded() && existing.is_object())
            meta = std::move(existing);
    }
    meta["tool"] = std::string(kToolName) + " " + std::string(kToolVersion);
    meta["prompt_sha256"] = prompt_sha256;
    if (!meta.contains("steps") || !meta["steps"].is_object())
        meta["steps"] = ordered_json::object();
    ordered_json entry = ordered_json::object();
    entry["generated_at"] = timestamp_utc();
    for (const auto& [key, value] : payload.items()) entry[key] = value;
    meta["steps"][step] = std::move(entry);
    detail::write_file_atomic(path, meta.dump(1) + "\n");
}

}  // namespace scenebench
