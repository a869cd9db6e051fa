#pragma once

namespace roa {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace roa
