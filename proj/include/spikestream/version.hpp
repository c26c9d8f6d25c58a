#pragma once

namespace spikestream {
inline constexpr const char* kVersion = "0.1.0";
}
