#pragma once

namespace drml {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace drml
