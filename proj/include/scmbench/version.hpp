#pragma once

namespace scmbench {

inline constexpr const char* kToolName = "scmbench";
inline constexpr const char* kToolVersion = "0.1.0";

// Bumped on any breaking change to the on-disk layout or file schemas.
inline constexpr int kSchemaVersion = 1;

}  // namespace scmbench
