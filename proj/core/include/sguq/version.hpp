#pragma once

namespace sguq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sguq
