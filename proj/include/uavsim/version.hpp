#pragma once

namespace uavsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace uavsim
