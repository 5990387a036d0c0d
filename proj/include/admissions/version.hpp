#pragma once

namespace admissions {

inline constexpr const char* kVersion = "0.1.0";

} // namespace admissions
