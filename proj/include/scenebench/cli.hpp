#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "scenebench/dataset.hpp"
#include "scenebench/ensemble.hpp"
#include "scenebench/metrics.hpp"
#include "scenebench/parsing.hpp"
#include "scenebench/predictions.hpp"
#include "scenebench/prompt.hpp"
#include "scenebench/providers.hpp"
#include "scenebench/report.hpp"
#include "scenebench/version.hpp"

namespace scenebench {

struct RunConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path provider_config_path;
    std::filesystem::path cache_dir;
    std::filesystem::path output_dir;
    CoercionPolicy policy;
    std::vector<std::string> vote_priority;
    std::string baseline_provider;
    int max_in_flight_override = 0;  // 0 keeps per-provider settings
};

namespace cli_detail {

inline std::vector<std::filesystem::path> sorted_files(
    const std::filesystem::path& dir, const std::string& extension) {
    if (!std::filesystem::is_directory(dir))
        throw no_input_error(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

// Predictions grouped by provider; provider identity comes from the records
// themselves, so file names are free-form.
inline std::map<std::string, std::vector<PredictionRecord>> load_prediction_dir(
    const std::filesystem::path& dir) {
    std::map<std::string, std::vector<PredictionRecord>> out;
    for (const std::filesystem::path& path : sorted_files(dir, ".jsonl")) {
        std::vector<PredictionRecord> records = read_predictions(path);
        if (records.empty())
            throw data_error(path.string() + ": no prediction records");
        const std::string& provider = records.front().provider_id;
        if (!out.emplace(provider, std::move(records)).second)
            throw data_error(path.string() +
                             ": provider \"" + provider +
                             "\" appears in more than one predictions file");
    }
    if (out.empty())
        throw no_input_error(dir.string() + ": no .jsonl prediction files");
    return out;
}

// The run step records its provider order; voting reuses it as the default
// tie-break priority so reruns agree with the original configuration.
inline std::vector<std::string> priority_from_run_meta(
    const std::filesystem::path& run_dir,
    const std::map<std::string, std::vector<PredictionRecord>>& by_provider) {
    std::filesystem::path meta_path = run_dir / "run_meta.json";
    if (std::filesystem::exists(meta_path)) {
        json meta =
            json::parse(detail::read_file(meta_path), nullptr, false);
        if (!meta.is_discarded() && meta.contains("steps") &&
            meta["steps"].contains("run") &&
            meta["steps"]["run"].contains("providers")) {
            std::vector<std::string> order;
            for (const json& id : meta["steps"]["run"]["providers"])
                if (id.is_string()) order.push_back(id.get<std::string>());
            bool covers = order.size() == by_provider.size();
            for (const std::string& id : order)
                covers = covers && by_provider.count(id) > 0;
            if (covers) return order;
        }
    }
    std::vector<std::string> order;
    for (const auto& [id, records] : by_provider) {
        (void)records;
        order.push_back(id);
    }
    return order;
}

inline int cmd_run(const RunConfig& config, bool use_cache) {
    std::vector<ProviderConfig> providers =
        load_provider_configs(config.provider_config_path);
    if (config.max_in_flight_override > 0)
        for (ProviderConfig& cfg : providers)
            cfg.max_in_flight =
                std::min(cfg.max_in_flight, config.max_in_flight_override);
    DatasetManifest manifest = load_manifest(config.manifest_path);
    const PromptText& prompt = build_prompt();
    ResponseCache cache(use_cache ? config.cache_dir
                                  : std::filesystem::path());
    RunOptions options;
    options.policy = config.policy;
    options.use_cache = use_cache;
    for (const ProviderConfig& cfg : providers) Provider(cfg).check_auth();
    BatchStats total;
    ordered_json per_provider = ordered_json::object();
    std::vector<std::string> provider_ids;
    for (const ProviderConfig& cfg : providers) {
        auto [set, stats] = run_provider(cfg, manifest, cache, options);
        write_predictions(
            config.output_dir / "predictions" / (cfg.id + ".jsonl"),
            set.records);
        ordered_json stat = ordered_json::object();
        stat["frames"] = stats.frames;
        stat["network_calls"] = stats.network_calls;
        stat["cache_hits"] = stats.cache_hits;
        stat["error_records"] = stats.error_records;
        per_provider[cfg.id] = std::move(stat);
        provider_ids.push_back(cfg.id);
        total += stats;
    }
    ordered_json payload = ordered_json::object();
    payload["manifest_sha256"] =
        detail::sha256_hex(detail::read_file(config.manifest_path));
    payload["providers"] = provider_ids;
    payload["parse_mode"] =
        config.policy.mode == CoercionPolicy::Mode::Strict ? "strict"
                                                           : "coerce_zero";
    payload["accept_string_integers"] = config.policy.accept_string_integers;
    payload["cache_enabled"] = use_cache;
    payload["frames"] = total.frames;
    payload["network_calls"] = total.network_calls;
    payload["cache_hits"] = total.cache_hits;
    payload["error_records"] = total.error_records;
    payload["per_provider"] = std::move(per_provider);
    update_run_meta(config.output_dir, "run", payload, prompt.sha256);
    return 0;
}

inline int cmd_eval(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& predictions_dir,
                    const std::filesystem::path& out_dir, bool exclude_fatal) {
    DatasetManifest manifest = load_manifest(manifest_path);
    auto by_provider = load_prediction_dir(predictions_dir);
    EvalOptions options;
    options.exclude_fatal = exclude_fatal;
    std::vector<std::string> provider_ids;
    for (const auto& [provider, records] : by_provider) {
        RunSummary summary = evaluate_provider(manifest, records, options);
        detail::write_file_atomic(
            out_dir / "metrics" / (provider + ".json"),
            run_summary_to_json(summary).dump(1) + "\n");
        provider_ids.push_back(provider);
    }
    ordered_json payload = ordered_json::object();
    payload["manifest_sha256"] =
        detail::sha256_hex(detail::read_file(manifest_path));
    payload["fatal_handling"] = exclude_fatal ? "exclude" : "score_zero";
    payload["providers"] = provider_ids;
    update_run_meta(out_dir, "eval", payload, build_prompt().sha256);
    return 0;
}

inline int cmd_ensemble(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& predictions_dir,
                        const std::filesystem::path& out_dir, size_t min_size,
                        std::vector<std::string> priority,
                        std::string baseline_id) {
    if (min_size < 3)
        throw usage_error("--min-size must be at least 3");
    DatasetManifest manifest = load_manifest(manifest_path);
    auto by_provider = load_prediction_dir(predictions_dir);
    if (by_provider.size() < 3)
        throw usage_error(
            "ensembles need at least 3 providers' predictions, found " +
            std::to_string(by_provider.size()));
    if (priority.empty())
        priority = priority_from_run_meta(out_dir, by_provider);
    if (priority.size() != by_provider.size())
        throw usage_error("priority must list every provider exactly once");
    for (const std::string& id : priority)
        if (by_provider.find(id) == by_provider.end())
            throw usage_error("priority names unknown provider \"" + id +
                              "\"");
    std::vector<RunSummary> singles;
    for (const std::string& id : priority)
        singles.push_back(evaluate_provider(manifest, by_provider.at(id)));
    const RunSummary* baseline = nullptr;
    if (baseline_id.empty()) {
        baseline = &pick_baseline(singles);
    } else {
        for (const RunSummary& s : singles)
            if (s.provider_id == baseline_id) baseline = &s;
        if (baseline == nullptr)
            throw usage_error("baseline \"" + baseline_id +
                              "\" is not among the providers");
    }
    std::vector<std::string> names;
    for (const std::vector<std::string>& members :
         enumerate_ensembles(priority, min_size)) {
        std::vector<PredictionRecord> voted =
            vote_predictions(members, by_provider);
        const std::string name = ensemble_name(members);
        write_predictions(out_dir / "ensembles" / (name + ".jsonl"), voted);
        RunSummary summary = evaluate_provider(manifest, voted);
        DeltaReport delta = delta_vs_baseline(summary, *baseline);
        ordered_json doc = run_summary_to_json(summary);
        doc["members"] = members;
        doc["delta_vs_baseline"] = delta_report_to_json(delta);
        detail::write_file_atomic(out_dir / "ensembles" / (name + ".json"),
                                  doc.dump(1) + "\n");
        names.push_back(name);
    }
    ordered_json payload = ordered_json::object();
    payload["baseline"] = baseline->provider_id;
    payload["priority"] = priority;
    payload["min_size"] = min_size;
    payload["ensembles"] = names;
    update_run_meta(out_dir, "ensemble", payload, build_prompt().sha256);
    return 0;
}

inline int cmd_report(const std::filesystem::path& run_dir) {
    std::vector<RunSummary> singles;
    for (const std::filesystem::path& path :
         sorted_files(run_dir / "metrics", ".json")) {
        json doc = json::parse(detail::read_file(path), nullptr, false);
        if (doc.is_discarded())
            throw data_error(path.string() + ": invalid JSON");
        singles.push_back(run_summary_from_json(doc));
    }
    if (singles.empty())
        throw no_input_error(run_dir.string() +
                             ": no metrics documents; run eval first");
    std::vector<RunSummary> ensembles;
    std::vector<std::pair<std::string, DeltaReport>> deltas;
    std::filesystem::path ens_dir = run_dir / "ensembles";
    if (std::filesystem::is_directory(ens_dir)) {
        for (const std::filesystem::path& path :
             sorted_files(ens_dir, ".json")) {
            json doc = json::parse(detail::read_file(path), nullptr, false);
            if (doc.is_discarded())
                throw data_error(path.string() + ": invalid JSON");
            RunSummary summary = run_summary_from_json(doc);
            if (doc.contains("delta_vs_baseline"))
                deltas.emplace_back(
                    summary.provider_id,
                    delta_report_from_json(doc["delta_vs_baseline"]));
            ensembles.push_back(std::move(summary));
        }
    }
    std::vector<std::string> chart_ids;
    for (Metric metric : {Metric::F1, Metric::Recall, Metric::Precision}) {
        ChartSpec radar = radar_chart_data(singles, metric);
        emit_chart(run_dir, radar);
        chart_ids.push_back(radar.chart_id);
    }
    std::vector<RunSummary> all = singles;
    all.insert(all.end(), ensembles.begin(), ensembles.end());
    ChartSpec bars = summary_chart_data(all);
    emit_chart(run_dir, bars);
    chart_ids.push_back(bars.chart_id);
    if (!deltas.empty()) {
        for (Metric metric : {Metric::F1, Metric::Recall, Metric::Precision}) {
            ChartSpec delta_chart = delta_chart_data(deltas, metric);
            emit_chart(run_dir, delta_chart);
            chart_ids.push_back(delta_chart.chart_id);
        }
    }
    ordered_json payload = ordered_json::object();
    payload["charts"] = chart_ids;
    update_run_meta(run_dir, "report", payload, build_prompt().sha256);
    return 0;
}

}  // namespace cli_detail

// Entry point shared by the binary and the tests. Writes a one-line JSON
// error summary to stderr and maps the failure class to the exit code.
inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Vision-language traffic-scene benchmark harness",
                 std::string(kToolName)};
    app.set_version_flag("--version", std::string(kToolName) + " " +
                                          std::string(kToolVersion));
    app.require_subcommand(1);

    RunConfig config;
    bool no_cache = false;
    std::string parse_mode = "coerce_zero";
    bool no_string_integers = false;
    bool exclude_fatal = false;
    std::filesystem::path run_dir, out_dir, predictions_dir, export_path;
    size_t min_size = 3;
    std::string priority_csv, baseline_id;

    CLI::App* run = app.add_subcommand(
        "run", "Query every provider over the manifest frames");
    run->add_option("--providers", config.provider_config_path,
                    "Provider config JSON")
        ->required();
    run->add_option("--manifest", config.manifest_path, "Dataset manifest JSONL")
        ->required();
    run->add_option("--out", config.output_dir, "Run output directory")
        ->required();
    run->add_option("--cache-dir", config.cache_dir,
                    "Response cache directory (default <out>/cache)");
    run->add_flag("--no-cache", no_cache, "Disable the response cache");
    run->add_option("--parse-mode", parse_mode,
                    "coerce_zero (default) or strict")
        ->check(CLI::IsMember({"coerce_zero", "strict"}));
    run->add_flag("--no-string-integers", no_string_integers,
                  "Treat quoted integers as unparseable");
    run->add_option("--max-in-flight", config.max_in_flight_override,
                    "Cap concurrent requests per provider");

    CLI::App* eval = app.add_subcommand(
        "eval", "Score stored predictions against the manifest");
    eval->add_option("--manifest", config.manifest_path,
                     "Dataset manifest JSONL")
        ->required();
    eval->add_option("--run-dir", run_dir,
                     "Run directory (reads <dir>/predictions)");
    eval->add_option("--predictions", predictions_dir,
                     "Directory of prediction JSONL files");
    eval->add_option("--out", out_dir,
                     "Output directory (default the run directory)");
    eval->add_flag("--exclude-fatal", exclude_fatal,
                   "Drop fatal records instead of scoring all-zero labels");

    CLI::App* ensemble = app.add_subcommand(
        "ensemble", "Vote every provider subset of size >= min-size");
    ensemble->add_option("--manifest", config.manifest_path,
                         "Dataset manifest JSONL")
        ->required();
    ensemble->add_option("--run-dir", run_dir,
                         "Run directory (reads <dir>/predictions)");
    ensemble->add_option("--predictions", predictions_dir,
                         "Directory of prediction JSONL files");
    ensemble->add_option("--out", out_dir,
                         "Output directory (default the run directory)");
    ensemble->add_option("--min-size", min_size,
                         "Smallest ensemble to enumerate (>= 3)");
    ensemble->add_option("--priority", priority_csv,
                         "Comma-separated tie-break order "
                         "(default: run_meta provider order)");
    ensemble->add_option("--baseline", baseline_id,
                         "Baseline provider id (default: best by "
                         "support-weighted F1)");

    CLI::App* report = app.add_subcommand(
        "report", "Render charts from stored metrics");
    report->add_option("--run-dir", run_dir, "Run directory")->required();

    CLI::App* prompt_cmd =
        app.add_subcommand("prompt", "Inspect the instruction template");
    prompt_cmd->require_subcommand(1);
    CLI::App* prompt_show =
        prompt_cmd->add_subcommand("show", "Print the template text");
    CLI::App* prompt_hash =
        prompt_cmd->add_subcommand("hash", "Print the template digest");

    CLI::App* dataset_cmd =
        app.add_subcommand("dataset", "Inspect a dataset manifest");
    dataset_cmd->require_subcommand(1);
    CLI::App* dataset_stats_cmd =
        dataset_cmd->add_subcommand("stats", "Print manifest statistics");
    dataset_stats_cmd
        ->add_option("--manifest", config.manifest_path,
                     "Dataset manifest JSONL")
        ->required();

    CLI::App* schema_cmd =
        app.add_subcommand("schema", "Inspect the attribute schema");
    schema_cmd->require_subcommand(1);
    CLI::App* schema_export =
        schema_cmd->add_subcommand("export", "Write the schema as JSON");
    schema_export->add_option("--out", export_path,
                              "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // help or version
        std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump()
                  << "\n";
        return static_cast<int>(ErrorCode::Usage);
    }

    try {
        if (*run) {
            if (config.cache_dir.empty())
                config.cache_dir = config.output_dir / "cache";
            config.policy.mode = parse_mode == "strict"
                                     ? CoercionPolicy::Mode::Strict
                                     : CoercionPolicy::Mode::CoerceZero;
            config.policy.accept_string_integers = !no_string_integers;
            return cli_detail::cmd_run(config, !no_cache);
        }
        if (*eval || *ensemble) {
            if (predictions_dir.empty()) {
                if (run_dir.empty())
                    throw usage_error(
                        "pass --run-dir or --predictions to locate the "
                        "prediction files");
                predictions_dir = run_dir / "predictions";
            }
            if (out_dir.empty()) {
                if (run_dir.empty())
                    throw usage_error("pass --out or --run-dir for outputs");
                out_dir = run_dir;
            }
        }
        if (*eval)
            return cli_detail::cmd_eval(config.manifest_path, predictions_dir,
                                        out_dir, exclude_fatal);
        if (*ensemble) {
            std::vector<std::string> priority;
            if (!priority_csv.empty()) {
                size_t pos = 0;
                while (pos <= priority_csv.size()) {
                    size_t comma = priority_csv.find(',', pos);
                    if (comma == std::string::npos) comma = priority_csv.size();
                    if (comma > pos)
                        priority.push_back(
                            priority_csv.substr(pos, comma - pos));
                    pos = comma + 1;
                }
            }
            return cli_detail::cmd_ensemble(config.manifest_path,
                                            predictions_dir, out_dir, min_size,
                                            std::move(priority), baseline_id);
        }
        if (*report) return cli_detail::cmd_report(run_dir);
        if (*prompt_show) {
            std::cout << build_prompt().text;
            return 0;
        }
        if (*prompt_hash) {
            std::cout << build_prompt().sha256 << "\n";
            return 0;
        }
        if (*dataset_stats_cmd) {
            DatasetManifest manifest = load_manifest(config.manifest_path);
            std::cout << dataset_stats(manifest).dump(1) << "\n";
            return 0;
        }
        if (*schema_export) {
            std::string doc = schema_to_json().dump(1) + "\n";
            if (export_path.empty())
                std::cout << doc;
            else
                detail::write_file_atomic(export_path, doc);
            return 0;
        }
        throw internal_error("no subcommand handled");
    } catch (const Error& e) {
        std::cerr << json{{"error", error_code_name(e.code())},
                          {"message", e.what()}}
                         .dump()
                  << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump()
                  << "\n";
        return static_cast<int>(ErrorCode::Internal);
    }
}

}  // namespace scenebench
