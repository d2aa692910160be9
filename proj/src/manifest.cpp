#include "mrf/manifest.hpp"

namespace mrf {

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const KeyValues& cfg, const KeyValues& outputs, double duration_ms) {
    KeyValues kv;
    kv.set("command", command);
    for (const auto& [key, value] : cfg.items()) kv.set("cfg." + key, value);
    for (const auto& [key, value] : outputs.items()) kv.set("out." + key, value);
    kv.set("meta.version", kToolVersion);
    kv.set_double("meta.duration_ms", duration_ms);
    write_key_values(path, kv);
}

Manifest read_manifest(const std::filesystem::path& path) {
    const KeyValues kv = parse_key_values(path);
    Manifest manifest;
    manifest.command = kv.get("command");
    for (const auto& [key, value] : kv.items()) {
        if (key.rfind("cfg.", 0) == 0) manifest.cfg.set(key.substr(4), value);
        if (key.rfind("out.", 0) == 0) manifest.outputs.set(key.substr(4), value);
    }
    return manifest;
}

} // namespace mrf
