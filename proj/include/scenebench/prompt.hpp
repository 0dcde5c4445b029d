#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "scenebench/detail/hash.hpp"
#include "scenebench/detail/prompt_text.hpp"
#include "scenebench/errors.hpp"
#include "scenebench/schema.hpp"

namespace scenebench {

// Digest of the canonical instruction text. build_prompt refuses to run if
// the embedded copy has drifted; regenerate via scripts/embed_prompt.sh.
inline constexpr std::string_view kScenePromptSha256 =
    "17d039505b57724087f97648b223df318ee7e721836219914955663adabba6aa";

struct PromptText {
    std::string text;
    std::string sha256;
};

inline const PromptText& build_prompt() {
    static const PromptText prompt = [] {
        std::string text(detail::kScenePromptText);
        std::string digest = detail::sha256_hex(text);
        if (digest != kScenePromptSha256)
            throw config_error(
                "embedded instruction text does not match the pinned digest; "
                "rerun scripts/embed_prompt.sh and update kScenePromptSha256 "
                "only on a deliberate template change");
        return PromptText{std::move(text), std::move(digest)};
    }();
    return prompt;
}

struct DecodeParams {
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct ImagePayload {
    std::string media_type;   // "image/jpeg" or "image/png"
    std::string data_base64;  // encoded raw bytes
    std::string sha256;       // digest of the raw bytes, pre-encoding
};

struct ModelRequest {
    PromptText prompt;
    ImagePayload image;
    DecodeParams decode;
};

inline ModelRequest build_request(ImagePayload image,
                                  DecodeParams decode = {}) {
    if (image.data_base64.empty())
        throw data_error("image payload is empty");
    if (image.media_type != "image/jpeg" && image.media_type != "image/png")
        throw data_error("unsupported image media type \"" +
                         image.media_type + "\"");
    if (decode.temperature < 0.0)
        throw config_error("temperature must be >= 0");
    return ModelRequest{build_prompt(), std::move(image), decode};
}

}  // namespace scenebench
