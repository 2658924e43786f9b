#include "qsim/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "qsim/errors.hpp"

namespace qsim {

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void RunManifest::set_digest(const std::string& spec_text,
                             const std::string& canonical_flags) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(spec_text + "\x1f" + canonical_flags)));
    config_digest = buf;
}

void RunManifest::add_phase(const std::string& name, double seconds) {
    phase_seconds.emplace_back(name, seconds);
}

void RunManifest::add_output(const std::string& path) { outputs.push_back(path); }

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["command"] = command;
    j["base_seed"] = base_seed;
    j["config_digest"] = config_digest;
    j["partial"] = partial;
    j["phases"] = nlohmann::json::array();
    for (const auto& [name, secs] : phase_seconds) {
        j["phases"].push_back({{"phase", name}, {"seconds", secs}});
    }
    j["outputs"] = outputs;
    return j.dump(2);
}

void RunManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write manifest: " + path);
    out << to_json() << "\n";
}

}  // namespace qsim
