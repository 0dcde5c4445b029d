#pragma once

#include <string_view>

namespace scenebench {

inline constexpr std::string_view kToolName = "scenebench";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace scenebench
