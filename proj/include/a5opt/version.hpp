#pragma once

namespace a5opt {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace a5opt
