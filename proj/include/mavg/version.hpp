#pragma once

namespace mavg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mavg
