#pragma once

namespace lade {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace lade
