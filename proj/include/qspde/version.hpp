#pragma once

namespace qspde {
inline constexpr const char* kVersion = "0.1.0";
}
