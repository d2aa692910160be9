#pragma once

#include <filesystem>

#include "mrf/config.hpp"

namespace mrf {

inline constexpr const char* kToolVersion = "0.1.0";

/// Run manifests are KeyValues files with a fixed layout: `command`, the
/// fully resolved configuration under `cfg.*`, artifact paths under `out.*`,
/// and `meta.*` (tool version, wall-clock duration). Re-running `command`
/// with the stored cfg.* keys reproduces the artifacts bit-identically;
/// meta.* is informational only.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const KeyValues& cfg, const KeyValues& outputs, double duration_ms);

struct Manifest {
    std::string command;
    KeyValues cfg;
    KeyValues outputs;
};

Manifest read_manifest(const std::filesystem::path& path);

} // namespace mrf
