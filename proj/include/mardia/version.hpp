#pragma once

namespace mardia {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace mardia
