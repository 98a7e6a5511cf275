#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hbflow/types.hpp"

namespace hbflow {

inline constexpr const char* kVersion = "0.1.0";

struct Manifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string experiment;
    double wall_time_s = 0.0;
    std::vector<std::string> artifacts;
};

inline std::uint64_t config_hash(const nlohmann::json& config) {
    // Canonical dump: nlohmann sorts object keys, so the hash is stable
    // under key reordering in the source file.
    return fnv1a(config.dump());
}

inline void write_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json j{
        {"version", kVersion},
        {"config_hash", m.config_hash},
        {"seed", m.seed},
        {"experiment", m.experiment},
        {"wall_time_s", m.wall_time_s},
        {"artifacts", m.artifacts},
    };
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << j.dump(2) << "\n";
}

}  // namespace hbflow
