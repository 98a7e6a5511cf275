#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbflow/types.hpp"

namespace hbflow {

/// Time-indexed parameter records on a uniform grid, shared by discrete and
/// continuous runs so their states can be compared at equal times.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> points;
    std::string label;
    std::uint64_t config_hash = 0;

    int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }

    double dt() const {
        if (times.size() < 2) return 0.0;
        return times[1] - times[0];
    }

    void push(double t, const Vec& p) {
        times.push_back(t);
        points.push_back(p);
    }

    void validate() const {
        if (times.size() != points.size())
            throw std::invalid_argument("trajectory: times/points length mismatch");
        const double h = dt();
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double step = times[i] - times[i - 1];
            if (step <= 0.0 || std::abs(step - h) > 1e-9 * (1.0 + std::abs(h)))
                throw std::invalid_argument("trajectory: grid not uniform/increasing");
        }
    }
};

// Columns: k, t, beta_0..beta_{d-1}. %.17g keeps the round trip bit-faithful.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "# manifest " << std::hex << traj.config_hash << std::dec;
    if (!traj.label.empty()) os << " label " << traj.label;
    os << "\n";
    os << "k,t";
    for (int j = 0; j < traj.dim(); ++j) os << ",beta_" << j;
    os << "\n";
    char buf[32];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << i;
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[i]);
        os << ',' << buf;
        for (int j = 0; j < traj.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.points[i][j]);
            os << ',' << buf;
        }
        os << "\n";
    }
}

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_trajectory_csv(traj, os);
}

}  // namespace hbflow
