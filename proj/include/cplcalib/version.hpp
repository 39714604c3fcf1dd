#pragma once

namespace cplcalib {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cplcalib
