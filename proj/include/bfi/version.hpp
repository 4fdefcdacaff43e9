#pragma once

namespace bfi {
inline constexpr const char* kVersion = "0.1.0";
}
