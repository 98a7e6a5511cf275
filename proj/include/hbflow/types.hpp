#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace hbflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// FNV-1a over a canonical string; used to tag trajectories and manifests.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hbflow
