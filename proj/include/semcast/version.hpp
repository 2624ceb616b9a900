#pragma once

namespace semcast {
inline constexpr const char* kVersion = "0.1.0";
}
