#pragma once

namespace leapbridge {

inline constexpr const char * kVersion = "0.1.0";

}  // namespace leapbridge
