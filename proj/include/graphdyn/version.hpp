#pragma once

namespace graphdyn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace graphdyn
