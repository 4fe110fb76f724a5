#pragma once

namespace triage {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever an emitted JSON schema changes shape.
inline constexpr int kSchemaVersion = 1;

// Bumped whenever a shipped prompt/criteria resource changes.
inline constexpr int kResourceVersion = 1;

}  // namespace triage
