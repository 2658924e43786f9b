#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qsim {

inline constexpr const char* kToolVersion = "1.0.0";

uint64_t fnv1a64(const std::string& data);

// Reproducibility record written next to every command's outputs: a stable
// digest of (spec text, canonical flag string), the seed, per-phase wall
// times, and the produced files.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string command;
    uint64_t base_seed = 0;
    std::string config_digest;
    std::vector<std::pair<std::string, double>> phase_seconds;
    std::vector<std::string> outputs;
    bool partial = false;

    void set_digest(const std::string& spec_text, const std::string& canonical_flags);
    void add_phase(const std::string& name, double seconds);
    void add_output(const std::string& path);
    std::string to_json() const;
    void save(const std::string& path) const;
};

}  // namespace qsim
