#include <gtest/gtest.h>

#include <string>

#include "scenebench/dataset.hpp"
#include "scenebench/detail/hash.hpp"
#include "test_util.hpp"

using namespace scenebench;

namespace {

std::filesystem::path eval20_manifest() {
    return testutil::fixture_path("eval20/manifest.jsonl");
}

TEST(ManifestLoading, ReadsHeaderRowsAndExclusions) {
    DatasetManifest manifest = load_manifest(eval20_manifest());
    EXPECT_EQ(manifest.source_note,
              "synthetic fixture, 1 frame per second equivalent");
    EXPECT_EQ(manifest.frames.size(), 22u);
    auto active = manifest.active_frames();
    EXPECT_EQ(active.size(), 20u);
    EXPECT_EQ(active.front()->frame_id, "frame_0001");
    EXPECT_EQ(active.back()->frame_id, "frame_0022");
    int excluded = 0;
    for (const FrameEntry& f : manifest.frames)
        if (f.excluded) {
            ++excluded;
            EXPECT_TRUE(f.exclusion_reason == "stationary_vehicle" ||
                        f.exclusion_reason == "no_significant_annotation")
                << f.frame_id;
        }
    EXPECT_EQ(excluded, 2);
    // Active rows carry a complete raw-domain truth label.
    for (const FrameEntry* f : active)
        EXPECT_EQ(f->truth.size(), kAttributeCount) << f->frame_id;
}

TEST(ManifestLoading, FirstRowWithFrameIdIsDataNotHeader) {
    testutil::TempDir dir;
    auto path = dir / "manifest.jsonl";
    ordered_json row = ordered_json::object();
    row["frame_id"] = "f1";
    row["image_path"] = "f1.png";
    row["truth"] = label_to_json(zero_label());
    testutil::write_text(path, row.dump() + "\n");
    DatasetManifest manifest = load_manifest(path);
    EXPECT_EQ(manifest.source_note, "");
    EXPECT_EQ(manifest.frames.size(), 1u);
}

TEST(ManifestLoading, ErrorsNameTheOffendingLine) {
    testutil::TempDir dir;
    ordered_json good = ordered_json::object();
    good["frame_id"] = "f1";
    good["image_path"] = "f1.png";
    good["truth"] = label_to_json(zero_label());

    auto expect_error_with = [&](const std::string& content,
                                 const std::string& needle) {
        auto path = dir / "bad.jsonl";
        testutil::write_text(path, content);
        try {
            load_manifest(path);
            ADD_FAILURE() << "expected failure for: " << needle;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::Data);
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
                << e.what();
        }
    };

    expect_error_with(good.dump() + "\nnot json\n", ":2:");
    expect_error_with(good.dump() + "\n" + good.dump() + "\n",
                      "duplicate frame_id");
    ordered_json no_image = good;
    no_image["frame_id"] = "f9";
    no_image.erase("image_path");
    expect_error_with(good.dump() + "\n" + no_image.dump() + "\n",
                      "image_path is required");
    ordered_json no_truth = good;
    no_truth["frame_id"] = "f2";
    no_truth.erase("truth");
    expect_error_with(good.dump() + "\n" + no_truth.dump() + "\n",
                      "truth label");
    ordered_json bad_truth = good;
    bad_truth["frame_id"] = "f3";
    bad_truth["truth"]["Weather"] = 9;
    expect_error_with(good.dump() + "\n" + bad_truth.dump() + "\n", ":2:");
    expect_error_with("\n\n", "no frames");
    EXPECT_THROW(load_manifest(dir / "absent.jsonl"), Error);
}

TEST(ManifestLoading, ExcludedRowsMayOmitTruth) {
    testutil::TempDir dir;
    auto path = dir / "manifest.jsonl";
    ordered_json active = ordered_json::object();
    active["frame_id"] = "keep";
    active["image_path"] = "keep.png";
    active["truth"] = label_to_json(zero_label());
    ordered_json skipped = ordered_json::object();
    skipped["frame_id"] = "skip";
    skipped["image_path"] = "skip.png";
    skipped["excluded"] = true;
    skipped["exclusion_reason"] = "blurred";
    testutil::write_text(path, active.dump() + "\n" + skipped.dump() + "\n");
    DatasetManifest manifest = load_manifest(path);
    EXPECT_EQ(manifest.frames.size(), 2u);
    EXPECT_EQ(manifest.active_frames().size(), 1u);
    EXPECT_EQ(manifest.frames[1].exclusion_reason, "blurred");
}

TEST(ImagePaths, RelativeEntriesResolveAgainstTheManifestDirectory) {
    DatasetManifest manifest;
    manifest.root = "/data/set1";
    FrameEntry relative;
    relative.image_path = "images/a.png";
    EXPECT_EQ(resolve_image_path(manifest, relative),
              std::filesystem::path("/data/set1/images/a.png"));
    FrameEntry absolute;
    absolute.image_path = "/elsewhere/b.png";
    EXPECT_EQ(resolve_image_path(manifest, absolute),
              std::filesystem::path("/elsewhere/b.png"));
}

TEST(ImageEncoding, SniffsContainerFromMagicBytesWithoutDecoding) {
    testutil::TempDir dir;
    auto png_path = dir / "a.png";
    auto jpeg_path = dir / "b.jpg";
    std::string png_bytes = testutil::tiny_png(1);
    std::string jpeg_bytes = testutil::tiny_jpeg(2);
    testutil::write_text(png_path, png_bytes);
    testutil::write_text(jpeg_path, jpeg_bytes);

    ImagePayload png = encode_image(png_path);
    EXPECT_EQ(png.media_type, "image/png");
    EXPECT_EQ(png.sha256, detail::sha256_hex(png_bytes));
    EXPECT_FALSE(png.data_base64.empty());

    ImagePayload jpeg = encode_image(jpeg_path);
    EXPECT_EQ(jpeg.media_type, "image/jpeg");
    EXPECT_EQ(jpeg.sha256, detail::sha256_hex(jpeg_bytes));

    // Same bytes, same payload.
    ImagePayload again = encode_image(png_path);
    EXPECT_EQ(again.data_base64, png.data_base64);
    EXPECT_EQ(again.sha256, png.sha256);
}

TEST(ImageEncoding, RejectsUnknownFormatsAndMissingFiles) {
    testutil::TempDir dir;
    auto bad = dir / "c.bmp";
    testutil::write_text(bad, "BM000000");
    try {
        encode_image(bad);
        ADD_FAILURE() << "unknown magic accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Data);
    }
    try {
        encode_image(dir / "missing.png");
        ADD_FAILURE() << "missing file accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoInput);
    }
}

TEST(DatasetStats, CountsFramesReasonsAndTruthValues) {
    DatasetManifest manifest = load_manifest(eval20_manifest());
    ordered_json stats = dataset_stats(manifest);
    EXPECT_EQ(stats["frames_total"], 22);
    EXPECT_EQ(stats["frames_active"], 20);
    EXPECT_EQ(stats["frames_excluded"], 2);
    EXPECT_EQ(stats["exclusion_reasons"]["stationary_vehicle"], 1);
    EXPECT_EQ(stats["exclusion_reasons"]["no_significant_annotation"], 1);
    EXPECT_EQ(stats["source_note"],
              "synthetic fixture, 1 frame per second equivalent");
    ASSERT_EQ(stats["truth_value_counts"].size(), kAttributeCount);
    for (const AttributeSpec& attr : attribute_registry()) {
        const json& hist = stats["truth_value_counts"][std::string(attr.key)];
        ASSERT_EQ(hist.size(), static_cast<size_t>(attr.domain_max) + 1)
            << attr.key;
        size_t total = 0;
        for (const auto& [value, count] : hist.items()) {
            (void)value;
            total += count.get<size_t>();
        }
        EXPECT_EQ(total, 20u) << attr.key;
    }
}

}  // namespace
