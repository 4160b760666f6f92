#pragma once

namespace heightlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace heightlab
