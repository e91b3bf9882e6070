#pragma once

namespace sfhn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sfhn
