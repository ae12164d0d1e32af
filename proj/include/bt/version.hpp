#pragma once

namespace bt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bt
