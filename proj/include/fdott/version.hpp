#pragma once

namespace fdott {
inline constexpr const char* kVersion = "0.1.0";
}
