#pragma once

namespace mixedflow {

inline constexpr const char* version = "0.1.0";

} // namespace mixedflow
