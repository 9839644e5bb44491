#pragma once

namespace ga {

inline constexpr const char* kToolName = "ga";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ga
