#pragma once

namespace vkd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vkd
