#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "scenebench/dataset.hpp"
#include "scenebench/parsing.hpp"
#include "scenebench/predictions.hpp"
#include "scenebench/prompt.hpp"

namespace scenebench {

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 500;
};

struct ProviderConfig {
    std::string id;
    std::string adapter;       // openai_chat_vision | generic_rest_json | mock
    std::string base_url;      // scheme://host[:port][/prefix]
    std::string model;
    std::string auth_env_var;  // name only; the key never appears in config
    int max_in_flight = 4;
    RetryPolicy retry;
    int timeout_s = 30;
    DecodeParams decode;
    json options = json::object();          // adapter-specific knobs
    std::filesystem::path config_dir = "."; // for resolving relative paths
};

inline bool is_known_adapter(std::string_view adapter) {
    return adapter == "openai_chat_vision" || adapter == "generic_rest_json" ||
           adapter == "mock";
}

// Config file: {"providers": [{id, adapter, base_url, model, auth_env_var,
// max_in_flight, retry: {max_attempts, base_backoff_ms}, ...}]}.
// Credentials are taken from the named environment variable at query time and
// are rejected if written into the file itself.
inline std::vector<ProviderConfig> load_provider_configs(
    const std::filesystem::path& path) {
    json doc = json::parse(detail::read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("providers") ||
        !doc["providers"].is_array())
        throw config_error(path.string() +
                           ": expected an object with a \"providers\" array");
    std::vector<ProviderConfig> out;
    std::map<std::string, bool> ids;
    for (const json& entry : doc["providers"]) {
        if (!entry.is_object())
            throw config_error(path.string() +
                               ": provider entries must be objects");
        for (const char* secret :
             {"api_key", "apikey", "auth_token", "authorization", "secret",
              "bearer_token"})
            if (entry.contains(secret))
                throw config_error(
                    path.string() + ": \"" + secret +
                    "\" found in provider config; credentials must come from "
                    "the environment variable named by auth_env_var");
        ProviderConfig cfg;
        cfg.config_dir = path.has_parent_path() ? path.parent_path()
                                                : std::filesystem::path(".");
        if (!entry.contains("id") || !entry["id"].is_string() ||
            entry["id"].get<std::string>().empty())
            throw config_error(path.string() +
                               ": provider id is required and non-empty");
        cfg.id = entry["id"].get<std::string>();
        if (cfg.id.find_first_of("+/\\ ") != std::string::npos)
            throw config_error(path.string() + ": provider id \"" + cfg.id +
                               "\" may not contain '+', '/', or spaces");
        if (!ids.emplace(cfg.id, true).second)
            throw config_error(path.string() + ": duplicate provider id \"" +
                               cfg.id + "\"");
        if (!entry.contains("adapter") || !entry["adapter"].is_string() ||
            !is_known_adapter(entry["adapter"].get<std::string>()))
            throw config_error(
                path.string() + ": provider \"" + cfg.id +
                "\" needs an adapter: openai_chat_vision, generic_rest_json, "
                "or mock");
        cfg.adapter = entry["adapter"].get<std::string>();
        if (entry.contains("base_url"))
            cfg.base_url = entry["base_url"].get<std::string>();
        if (cfg.adapter != "mock" && cfg.base_url.empty())
            throw config_error(path.string() + ": provider \"" + cfg.id +
                               "\" needs a base_url");
        if (entry.contains("model"))
            cfg.model = entry["model"].get<std::string>();
        if (cfg.adapter == "openai_chat_vision" && cfg.model.empty())
            throw config_error(path.string() + ": provider \"" + cfg.id +
                               "\" needs a model name");
        // Distinct mocks must never share cache entries.
        if (cfg.adapter == "mock" && cfg.model.empty()) cfg.model = cfg.id;
        if (entry.contains("auth_env_var"))
            cfg.auth_env_var = entry["auth_env_var"].get<std::string>();
        if (entry.contains("max_in_flight")) {
            cfg.max_in_flight = entry["max_in_flight"].get<int>();
            if (cfg.max_in_flight < 1)
                throw config_error(path.string() +
                                   ": max_in_flight must be >= 1");
        }
        if (entry.contains("retry")) {
            const json& retry = entry["retry"];
            if (retry.contains("max_attempts"))
                cfg.retry.max_attempts = retry["max_attempts"].get<int>();
            if (retry.contains("base_backoff_ms"))
                cfg.retry.base_backoff_ms =
                    retry["base_backoff_ms"].get<int>();
            if (cfg.retry.max_attempts < 1 || cfg.retry.base_backoff_ms < 0)
                throw config_error(path.string() + ": invalid retry policy");
        }
        if (entry.contains("timeout_s")) {
            cfg.timeout_s = entry["timeout_s"].get<int>();
            if (cfg.timeout_s < 1)
                throw config_error(path.string() + ": timeout_s must be >= 1");
        }
        if (entry.contains("temperature"))
            cfg.decode.temperature = entry["temperature"].get<double>();
        if (entry.contains("max_output_tokens"))
            cfg.decode.max_output_tokens =
                entry["max_output_tokens"].get<int>();
        if (cfg.decode.temperature < 0.0 || cfg.decode.max_output_tokens < 1)
            throw config_error(path.string() + ": invalid decode parameters");
        if (entry.contains("options")) {
            if (!entry["options"].is_object())
                throw config_error(path.string() +
                                   ": options must be an object");
            cfg.options = entry["options"];
        }
        out.push_back(std::move(cfg));
    }
    if (out.empty())
        throw config_error(path.string() + ": no providers configured");
    return out;
}

struct TransportError {
    std::string kind;  // timeout | transport | rate_limited | http_status |
                       // malformed_reply | mock_error
    std::string detail;
};

struct ModelResponse {
    std::string provider_id;
    std::string frame_id;
    std::string raw_text;
    int64_t latency_ms = 0;
    int attempt_count = 0;
    bool from_cache = false;
    std::optional<TransportError> error;  // exactly one of raw_text/error
};

// Content-addressed response store: one JSON file per key under the cache
// directory. Writes are atomic so concurrent runs never see partial files.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) detail::ensure_dir(dir_);
    }

    bool enabled() const { return !dir_.empty(); }

    // Everything that can change the model's answer goes into the key;
    // transport details (base_url, retries) deliberately do not.
    static std::string key(const ProviderConfig& cfg, const ModelRequest& req) {
        char temp[32];
        std::snprintf(temp, sizeof temp, "%.6f", req.decode.temperature);
        std::string canonical = cfg.adapter;
        canonical += '\n';
        canonical += cfg.model;
        canonical += '\n';
        canonical += req.prompt.sha256;
        canonical += '\n';
        canonical += req.image.sha256;
        canonical += '\n';
        canonical += temp;
        canonical += '\n';
        canonical += std::to_string(req.decode.max_output_tokens);
        return detail::sha256_hex(canonical);
    }

    std::optional<std::string> get(const std::string& key) const {
        if (!enabled()) return std::nullopt;
        std::filesystem::path p = dir_ / (key + ".json");
        if (!std::filesystem::exists(p)) return std::nullopt;
        json doc = json::parse(detail::read_file(p), nullptr, false);
        if (doc.is_discarded() || !doc.is_object() ||
            !doc.contains("raw_text") || !doc["raw_text"].is_string())
            return std::nullopt;  // corrupt entries count as misses
        return doc["raw_text"].get<std::string>();
    }

    void put(const ProviderConfig& cfg, const std::string& key,
             const std::string& raw_text) const {
        if (!enabled()) return;
        ordered_json doc = ordered_json::object();
        doc["raw_text"] = raw_text;
        doc["adapter"] = cfg.adapter;
        doc["model"] = cfg.model;
        detail::write_file_atomic(dir_ / (key + ".json"), doc.dump(1) + "\n");
    }

private:
    std::filesystem::path dir_;
};

namespace detail {

struct SplitUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // leading path, possibly empty
};

inline SplitUrl split_url(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw config_error("base_url \"" + url +
                           "\" must start with http:// or https://");
    size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path), prefix};
}

inline int parse_retry_after_s(const std::string& value) {
    if (value.empty()) return -1;
    int seconds = 0;
    for (char c : value) {
        if (c < '0' || c > '9') return -1;  // HTTP-date form is ignored
        seconds = seconds * 10 + (c - '0');
        if (seconds > 30) return 30;
    }
    return seconds;
}

inline void backoff_sleep(const RetryPolicy& retry, int attempt,
                          int retry_after_s) {
    int64_t ms;
    if (retry_after_s >= 0) {
        ms = static_cast<int64_t>(retry_after_s) * 1000;
    } else {
        ms = retry.base_backoff_ms;
        for (int i = 1; i < attempt; ++i) ms *= 2;
        thread_local std::mt19937 rng{std::random_device{}()};
        std::uniform_real_distribution<double> jitter(0.75, 1.25);
        ms = static_cast<int64_t>(static_cast<double>(ms) * jitter(rng));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace detail

class Provider {
public:
    explicit Provider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

    const ProviderConfig& config() const { return cfg_; }

    // Throws when a named credential variable is absent from the
    // environment; called before any network traffic.
    void check_auth() const {
        if (cfg_.auth_env_var.empty()) return;
        const char* value = std::getenv(cfg_.auth_env_var.c_str());
        if (value == nullptr || *value == '\0')
            throw auth_error("environment variable " + cfg_.auth_env_var +
                             " required by provider \"" + cfg_.id +
                             "\" is not set");
    }

    // One logical request: retries transport failures, 429, and 5xx with
    // exponential backoff; terminal failures come back as a structured
    // error, never an exception. HTTP 401/403 throws: a rejected credential
    // is a configuration problem and aborts the run.
    ModelResponse query(const std::string& frame_id,
                        const ModelRequest& req) const {
        ModelResponse resp;
        resp.provider_id = cfg_.id;
        resp.frame_id = frame_id;
        if (cfg_.adapter == "mock") {
            resp.attempt_count = 1;
            mock_reply(frame_id, resp);
            return resp;
        }
        check_auth();
        auto started = std::chrono::steady_clock::now();
        auto url = detail::split_url(cfg_.base_url);
        std::string path, body;
        build_http_request(req, url.path_prefix, path, body);
        for (int attempt = 1;; ++attempt) {
            resp.attempt_count = attempt;
            httplib::Client client(url.origin);
            client.set_connection_timeout(cfg_.timeout_s, 0);
            client.set_read_timeout(cfg_.timeout_s, 0);
            client.set_write_timeout(cfg_.timeout_s, 0);
            httplib::Headers headers;
            if (!cfg_.auth_env_var.empty())
                headers.emplace("Authorization",
                                std::string("Bearer ") +
                                    std::getenv(cfg_.auth_env_var.c_str()));
            auto res = client.Post(path, headers, body, "application/json");
            int retry_after_s = -1;
            std::string failure_kind, failure_detail;
            if (!res) {
                failure_kind = res.error() == httplib::Error::ConnectionTimeout ||
                                       res.error() == httplib::Error::Read
                                   ? "timeout"
                                   : "transport";
                failure_detail = httplib::to_string(res.error());
            } else if (res->status == 200) {
                std::string text, parse_detail;
                if (parse_http_reply(res->body, text, parse_detail)) {
                    resp.raw_text = std::move(text);
                } else {
                    resp.error = TransportError{"malformed_reply",
                                                parse_detail};
                }
                break;
            } else if (res->status == 401 || res->status == 403) {
                throw auth_error("provider \"" + cfg_.id +
                                 "\" rejected the credential (HTTP " +
                                 std::to_string(res->status) + ")");
            } else if (res->status == 429 || res->status >= 500) {
                failure_kind =
                    res->status == 429 ? "rate_limited" : "http_status";
                failure_detail = "HTTP " + std::to_string(res->status);
                retry_after_s = detail::parse_retry_after_s(
                    res->get_header_value("Retry-After"));
            } else {
                resp.error = TransportError{
                    "http_status", "HTTP " + std::to_string(res->status)};
                break;
            }
            if (attempt >= cfg_.retry.max_attempts) {
                resp.error = TransportError{
                    failure_kind, failure_detail + " after " +
                                      std::to_string(attempt) + " attempts"};
                break;
            }
            detail::backoff_sleep(cfg_.retry, attempt, retry_after_s);
        }
        resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
        return resp;
    }

private:
    void build_http_request(const ModelRequest& req,
                            const std::string& path_prefix, std::string& path,
                            std::string& body) const {
        if (cfg_.adapter == "openai_chat_vision") {
            path = path_prefix + "/chat/completions";
            ordered_json image_part = ordered_json::object();
            image_part["type"] = "image_url";
            image_part["image_url"] = {
                {"url", "data:" + req.image.media_type + ";base64," +
                            req.image.data_base64}};
            ordered_json text_part = ordered_json::object();
            text_part["type"] = "text";
            text_part["text"] = req.prompt.text;
            ordered_json message = ordered_json::object();
            message["role"] = "user";
            message["content"] =
                ordered_json::array({std::move(text_part),
                                     std::move(image_part)});
            ordered_json doc = ordered_json::object();
            doc["model"] = cfg_.model;
            doc["temperature"] = req.decode.temperature;
            doc["max_tokens"] = req.decode.max_output_tokens;
            doc["messages"] = ordered_json::array({std::move(message)});
            body = doc.dump();
        } else {  // generic_rest_json
            path = path_prefix.empty() ? "/" : path_prefix;
            ordered_json doc = ordered_json::object();
            doc["model"] = cfg_.model;
            doc["prompt"] = req.prompt.text;
            doc["image_media_type"] = req.image.media_type;
            doc["image_base64"] = req.image.data_base64;
            doc["temperature"] = req.decode.temperature;
            doc["max_output_tokens"] = req.decode.max_output_tokens;
            body = doc.dump();
        }
    }

    bool parse_http_reply(const std::string& body, std::string& text,
                          std::string& detail_out) const {
        json doc = json::parse(body, nullptr, false);
        if (doc.is_discarded()) {
            detail_out = "reply body is not JSON";
            return false;
        }
        if (cfg_.adapter == "openai_chat_vision") {
            if (doc.contains("choices") && doc["choices"].is_array() &&
                !doc["choices"].empty()) {
                const json& message = doc["choices"][0];
                if (message.contains("message") &&
                    message["message"].contains("content") &&
                    message["message"]["content"].is_string()) {
                    text = message["message"]["content"].get<std::string>();
                    return true;
                }
            }
            detail_out = "reply lacks choices[0].message.content";
            return false;
        }
        if (doc.contains("text") && doc["text"].is_string()) {
            text = doc["text"].get<std::string>();
            return true;
        }
        detail_out = "reply lacks a \"text\" string field";
        return false;
    }

    // Deterministic stand-in for a hosted model. Default behavior derives an
    // in-domain label from a digest of (provider id, frame id) and wraps it
    // in a fenced block; options override it with canned text, per-frame
    // fixture files, or scripted failures.
    void mock_reply(const std::string& frame_id, ModelResponse& resp) const {
        if (cfg_.options.contains("error_frames"))
            for (const json& f : cfg_.options["error_frames"])
                if (f.is_string() && f.get<std::string>() == frame_id) {
                    resp.error =
                        TransportError{"mock_error", "scripted failure"};
                    return;
                }
        if (cfg_.options.contains("canned_text")) {
            resp.raw_text = cfg_.options["canned_text"].get<std::string>();
            return;
        }
        if (cfg_.options.contains("fixture_dir")) {
            std::filesystem::path dir(
                cfg_.options["fixture_dir"].get<std::string>());
            if (dir.is_relative()) dir = cfg_.config_dir / dir;
            resp.raw_text = detail::read_file(dir / (frame_id + ".txt"));
            return;
        }
        std::string digest = detail::sha256_hex(cfg_.id + "|" + frame_id);
        auto hex_value = [&](size_t i) {
            char c = digest[i];
            return c <= '9' ? c - '0' : c - 'a' + 10;
        };
        ordered_json label = ordered_json::object();
        size_t i = 0;
        for (const AttributeSpec& attr : attribute_registry()) {
            label[std::string(attr.key)] =
                hex_value(i++) % (attr.domain_max + 1);
        }
        resp.raw_text = "```json\n" + label.dump(2) + "\n```";
    }

    ProviderConfig cfg_;
};

struct BatchStats {
    int64_t frames = 0;
    int64_t network_calls = 0;  // adapter invocations, cache hits excluded
    int64_t cache_hits = 0;
    int64_t error_records = 0;  // records carrying a fatal diagnostic

    BatchStats& operator+=(const BatchStats& other) {
        frames += other.frames;
        network_calls += other.network_calls;
        cache_hits += other.cache_hits;
        error_records += other.error_records;
        return *this;
    }
};

struct RunOptions {
    CoercionPolicy policy;
    bool use_cache = true;
};

// Queries one provider over every active frame, bounded by max_in_flight
// concurrent requests. Results are stored by frame index, so scheduling
// order never changes the output. Transport failures become error records;
// only configuration problems (auth, bad config) abort.
inline std::pair<PredictionSet, BatchStats> run_provider(
    const ProviderConfig& cfg, const DatasetManifest& manifest,
    const ResponseCache& cache, const RunOptions& options = {}) {
    Provider provider(cfg);
    provider.check_auth();
    auto frames = manifest.active_frames();
    if (frames.empty()) throw data_error("manifest has no active frames");
    std::vector<PredictionRecord> records(frames.size());
    std::atomic<size_t> next{0};
    std::atomic<int64_t> network_calls{0}, cache_hits{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!stop.load()) {
            size_t i = next.fetch_add(1);
            if (i >= frames.size()) break;
            try {
                const FrameEntry& frame = *frames[i];
                ImagePayload image =
                    encode_image(resolve_image_path(manifest, frame));
                ModelRequest req = build_request(std::move(image), cfg.decode);
                std::string key = ResponseCache::key(cfg, req);
                ModelResponse resp;
                resp.provider_id = cfg.id;
                resp.frame_id = frame.frame_id;
                if (options.use_cache) {
                    if (auto hit = cache.get(key)) {
                        resp.raw_text = *hit;
                        resp.from_cache = true;
                        cache_hits.fetch_add(1);
                    }
                }
                if (!resp.from_cache) {
                    resp = provider.query(frame.frame_id, req);
                    network_calls.fetch_add(1);
                    if (!resp.error && options.use_cache)
                        cache.put(cfg, key, resp.raw_text);
                }
                PredictionRecord record;
                record.frame_id = frame.frame_id;
                record.provider_id = cfg.id;
                record.latency_ms = resp.latency_ms;
                record.from_cache = resp.from_cache;
                if (resp.error) {
                    record.raw_text = "";
                    record.label = zero_label();
                    record.diagnostics.push_back(
                        {DiagnosticKind::ProviderError, "",
                         resp.error->kind + ": " + resp.error->detail});
                } else {
                    record.raw_text = resp.raw_text;
                    ParseOutcome outcome =
                        parse_response(record.raw_text, options.policy);
                    record.label = std::move(outcome.label);
                    record.diagnostics = std::move(outcome.diagnostics);
                }
                records[i] = std::move(record);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                stop.store(true);
                break;
            }
        }
    };
    size_t worker_count = std::min<size_t>(
        static_cast<size_t>(cfg.max_in_flight), frames.size());
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (size_t t = 0; t < worker_count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    BatchStats stats;
    stats.frames = static_cast<int64_t>(records.size());
    stats.network_calls = network_calls.load();
    stats.cache_hits = cache_hits.load();
    for (const PredictionRecord& r : records)
        if (is_fatal(r)) ++stats.error_records;
    return {PredictionSet{cfg.id, std::move(records)}, stats};
}

// Providers run one after another; frames fan out within each provider.
inline std::pair<std::vector<PredictionSet>, BatchStats> run_batch(
    const std::vector<ProviderConfig>& cfgs, const DatasetManifest& manifest,
    const ResponseCache& cache, const RunOptions& options = {}) {
    for (const ProviderConfig& cfg : cfgs) Provider(cfg).check_auth();
    std::vector<PredictionSet> sets;
    BatchStats total;
    for (const ProviderConfig& cfg : cfgs) {
        auto [set, stats] = run_provider(cfg, manifest, cache, options);
        sets.push_back(std::move(set));
        total += stats;
    }
    return {std::move(sets), total};
}

}  // namespace scenebench
