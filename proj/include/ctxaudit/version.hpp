#pragma once

namespace ctxaudit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ctxaudit
