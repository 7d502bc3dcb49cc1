#pragma once

namespace lingad {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lingad
