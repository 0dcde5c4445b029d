#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "scenebench/detail/base64.hpp"
#include "scenebench/detail/fsio.hpp"
#include "scenebench/detail/hash.hpp"
#include "scenebench/prompt.hpp"
#include "scenebench/schema.hpp"

namespace scenebench {

struct FrameEntry {
    std::string frame_id;
    std::string image_path;  // as written in the manifest, resolved lazily
    SceneLabel truth;        // raw-domain values; empty when excluded
    bool excluded = false;
    std::string exclusion_reason;
};

struct DatasetManifest {
    std::filesystem::path root;  // directory containing the manifest file
    std::string source_note;
    std::vector<FrameEntry> frames;

    std::vector<const FrameEntry*> active_frames() const {
        std::vector<const FrameEntry*> out;
        for (const FrameEntry& f : frames)
            if (!f.excluded) out.push_back(&f);
        return out;
    }
};

// JSONL manifest: one frame per line. An optional leading object without a
// frame_id carries dataset-level metadata (source_note). Excluded rows keep
// their exclusion_reason and may omit truth.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::string content = detail::read_file(path);
    DatasetManifest manifest;
    manifest.root = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
    std::map<std::string, size_t> seen;
    bool first_row = true;
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
        auto fail = [&](const std::string& msg) -> Error {
            return data_error(path.string() + ":" + std::to_string(line_no) +
                              ": " + msg);
        };
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw fail("manifest line is not a JSON object");
        if (first_row && !obj.contains("frame_id")) {
            if (obj.contains("source_note"))
                manifest.source_note = obj["source_note"].get<std::string>();
            first_row = false;
            continue;
        }
        first_row = false;
        FrameEntry entry;
        if (!obj.contains("frame_id") || !obj["frame_id"].is_string())
            throw fail("frame_id is required");
        entry.frame_id = obj["frame_id"].get<std::string>();
        if (entry.frame_id.empty()) throw fail("frame_id must be non-empty");
        if (!seen.emplace(entry.frame_id, line_no).second)
            throw fail("duplicate frame_id \"" + entry.frame_id + "\"");
        if (!obj.contains("image_path") || !obj["image_path"].is_string())
            throw fail("image_path is required");
        entry.image_path = obj["image_path"].get<std::string>();
        if (obj.contains("excluded")) {
            if (!obj["excluded"].is_boolean())
                throw fail("excluded must be a boolean");
            entry.excluded = obj["excluded"].get<bool>();
        }
        if (obj.contains("exclusion_reason"))
            entry.exclusion_reason =
                obj["exclusion_reason"].get<std::string>();
        if (entry.excluded) {
            manifest.frames.push_back(std::move(entry));
            continue;
        }
        if (!obj.contains("truth"))
            throw fail("active frame requires a truth label");
        try {
            entry.truth = label_from_json(obj["truth"]);
        } catch (const Error& e) {
            throw fail(std::string("truth: ") + e.what());
        }
        manifest.frames.push_back(std::move(entry));
    }
    if (manifest.frames.empty())
        throw data_error(path.string() + ": manifest has no frames");
    return manifest;
}

inline std::filesystem::path resolve_image_path(const DatasetManifest& manifest,
                                                const FrameEntry& entry) {
    std::filesystem::path p(entry.image_path);
    return p.is_absolute() ? p : manifest.root / p;
}

// Reads the image bytes, sniffs the container format from magic bytes, and
// packages them for transport. The bytes are never decoded.
inline ImagePayload encode_image(const std::filesystem::path& path) {
    std::string bytes = detail::read_file(path);
    std::string media_type;
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
        static_cast<unsigned char>(bytes[1]) == 0xD8 &&
        static_cast<unsigned char>(bytes[2]) == 0xFF)
        media_type = "image/jpeg";
    else if (bytes.size() >= 8 &&
             bytes.compare(0, 8, "\x89PNG\r\n\x1a\n", 8) == 0)
        media_type = "image/png";
    else
        throw data_error(path.string() +
                         ": not a JPEG or PNG image (unknown magic bytes)");
    ImagePayload payload;
    payload.media_type = std::move(media_type);
    payload.sha256 = detail::sha256_hex(bytes);
    payload.data_base64 = detail::base64_encode(bytes);
    return payload;
}

inline ordered_json dataset_stats(const DatasetManifest& manifest) {
    ordered_json out = ordered_json::object();
    auto active = manifest.active_frames();
    out["frames_total"] = manifest.frames.size();
    out["frames_active"] = active.size();
    out["frames_excluded"] = manifest.frames.size() - active.size();
    std::map<std::string, size_t> reasons;
    for (const FrameEntry& f : manifest.frames)
        if (f.excluded)
            ++reasons[f.exclusion_reason.empty() ? "unspecified"
                                                 : f.exclusion_reason];
    ordered_json reasons_json = ordered_json::object();
    for (const auto& [reason, count] : reasons) reasons_json[reason] = count;
    out["exclusion_reasons"] = std::move(reasons_json);
    if (!manifest.source_note.empty())
        out["source_note"] = manifest.source_note;
    ordered_json counts = ordered_json::object();
    for (const AttributeSpec& attr : attribute_registry()) {
        std::vector<size_t> hist(static_cast<size_t>(attr.domain_max) + 1, 0);
        for (const FrameEntry* f : active)
            ++hist[static_cast<size_t>(
                f->truth.at(std::string(attr.key)))];
        ordered_json per_value = ordered_json::object();
        for (size_t v = 0; v < hist.size(); ++v)
            per_value[std::to_string(v)] = hist[v];
        counts[std::string(attr.key)] = std::move(per_value);
    }
    out["truth_value_counts"] = std::move(counts);
    return out;
}

}  // namespace scenebench
