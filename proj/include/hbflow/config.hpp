#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hbflow/errors.hpp"
#include "hbflow/flows.hpp"
#include "hbflow/mlp.hpp"
#include "hbflow/problem.hpp"

namespace hbflow {

// Experiment configs are single JSON documents: nested blocks, diffable, and
// hashable. Validation reports the offending field path.

namespace cfgdetail {

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& path,
                                     const std::string& key) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(path.empty() ? key : path + "." + key, "missing required field");
    return j.at(key);
}

template <typename T>
T require_as(const nlohmann::json& j, const std::string& path, const std::string& key,
             const char* type_name) {
    const auto& v = require(j, path, key);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path.empty() ? key : path + "." + key,
                          std::string("expected ") + type_name);
    }
}

inline double require_number(const nlohmann::json& j, const std::string& path,
                             const std::string& key) {
    return require_as<double>(j, path, key, "number");
}

inline long require_integer(const nlohmann::json& j, const std::string& path,
                            const std::string& key) {
    return require_as<long>(j, path, key, "integer");
}

inline std::string require_string(const nlohmann::json& j, const std::string& path,
                                  const std::string& key) {
    return require_as<std::string>(j, path, key, "string");
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& path, const std::string& key,
         T fallback, const char* type_name) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path.empty() ? key : path + "." + key,
                          std::string("expected ") + type_name);
    }
}

inline std::vector<double> require_number_list(const nlohmann::json& j,
                                               const std::string& path,
                                               const std::string& key,
                                               std::size_t min_len = 1) {
    auto v = require_as<std::vector<double>>(j, path, key, "array of numbers");
    if (v.size() < min_len)
        throw ConfigError(path.empty() ? key : path + "." + key,
                          "needs at least " + std::to_string(min_len) + " entries");
    return v;
}

}  // namespace cfgdetail

inline Vec parse_vec(const nlohmann::json& j, const std::string& path,
                     const std::string& key, int expected_dim = -1) {
    auto v = cfgdetail::require_as<std::vector<double>>(j, path, key, "array of numbers");
    if (expected_dim >= 0 && static_cast<int>(v.size()) != expected_dim)
        throw ConfigError(path + "." + key,
                          "expected length " + std::to_string(expected_dim));
    return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size()));
}

/// Parses a problem block: {"type": "two_d"|"quadratic"|"mlp", ...}.
inline Problem parse_problem(const nlohmann::json& j, const std::string& path,
                             std::uint64_t seed) {
    const std::string type = cfgdetail::require_string(j, path, "type");
    if (type == "two_d") {
        return make_two_d(cfgdetail::require_number(j, path, "x"),
                          cfgdetail::require_number(j, path, "y"));
    }
    if (type == "quadratic") {
        auto rows = cfgdetail::require_as<std::vector<std::vector<double>>>(
            j, path, "A", "matrix (array of arrays)");
        const int d = static_cast<int>(rows.size());
        Mat A(d, d);
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(rows[i].size()) != d)
                throw ConfigError(path + ".A", "matrix must be square");
            for (int c = 0; c < d; ++c) A(i, c) = rows[i][c];
        }
        const Vec b = parse_vec(j, path, "b", d);
        return make_quadratic(A, b);
    }
    if (type == "mlp") {
        MlpSpec spec;
        spec.input_dim = static_cast<int>(cfgdetail::require_integer(j, path, "input_dim"));
        spec.hidden = static_cast<int>(cfgdetail::require_integer(j, path, "hidden"));
        spec.samples = static_cast<int>(cfgdetail::require_integer(j, path, "samples"));
        spec.init_scale = cfgdetail::get_or<double>(j, path, "init_scale", 1.0, "number");
        spec.target_scale = cfgdetail::get_or<double>(j, path, "target_scale", 1.0, "number");
        spec.noise = cfgdetail::get_or<double>(j, path, "noise", 0.1, "number");
        spec.seed = seed;
        return make_mlp_problem(spec);
    }
    throw ConfigError(path + ".type", "unknown problem type '" + type + "'");
}

inline MlpSpec parse_mlp_spec(const nlohmann::json& j, const std::string& path,
                              std::uint64_t seed) {
    if (cfgdetail::require_string(j, path, "type") != "mlp")
        throw ConfigError(path + ".type", "expected 'mlp'");
    MlpSpec spec;
    spec.input_dim = static_cast<int>(cfgdetail::require_integer(j, path, "input_dim"));
    spec.hidden = static_cast<int>(cfgdetail::require_integer(j, path, "hidden"));
    spec.samples = static_cast<int>(cfgdetail::require_integer(j, path, "samples"));
    spec.init_scale = cfgdetail::get_or<double>(j, path, "init_scale", 1.0, "number");
    spec.target_scale = cfgdetail::get_or<double>(j, path, "target_scale", 1.0, "number");
    spec.noise = cfgdetail::get_or<double>(j, path, "noise", 0.1, "number");
    spec.seed = seed;
    return spec;
}

inline Integrator parse_integrator(const std::string& s, const std::string& path) {
    if (s == "euler") return Integrator::Euler;
    if (s == "rk4") return Integrator::Rk4;
    throw ConfigError(path, "integrator must be 'euler' or 'rk4'");
}

inline CtMode parse_ct_mode(const std::string& s, const std::string& path) {
    if (s == "finite_k") return CtMode::FiniteK;
    if (s == "asymptotic") return CtMode::Asymptotic;
    throw ConfigError(path, "ct_mode must be 'finite_k' or 'asymptotic'");
}

/// Parses a flow block ({"substeps": n, "integrator": ..., "ct_mode": ...});
/// kind/alpha/mu/eta are filled in by the experiment.
inline FlowConfig parse_flow_block(const nlohmann::json& j, const std::string& path) {
    FlowConfig f;
    if (j.is_null()) return f;
    f.substeps = static_cast<int>(cfgdetail::get_or<long>(j, path, "substeps", 10, "integer"));
    f.integrator = parse_integrator(
        cfgdetail::get_or<std::string>(j, path, "integrator", "euler", "string"),
        path + ".integrator");
    f.ct.mode = parse_ct_mode(
        cfgdetail::get_or<std::string>(j, path, "ct_mode", "finite_k", "string"),
        path + ".ct_mode");
    f.ct.sigma_max_generic =
        static_cast<int>(cfgdetail::get_or<long>(j, path, "sigma_max_generic", 1, "integer"));
    return f;
}

}  // namespace hbflow
