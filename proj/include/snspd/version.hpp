#pragma once

namespace snspd {

inline constexpr const char* kToolName = "snspd-lab";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace snspd
