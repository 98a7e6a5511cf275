#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>

#include "hbflow/types.hpp"

namespace hbflow {

// Central differences with a caller-visible warning channel. Warnings fire
// when the step is so small that the difference is dominated by rounding;
// with no sink installed they go to stderr rather than being dropped.
using WarnSink = std::function<void(const std::string&)>;

inline void emit_warning(const WarnSink& sink, const std::string& msg) {
    if (sink)
        sink(msg);
    else
        std::cerr << "[hbflow] warning: " << msg << "\n";
}

// Default step for first-order central differences.
inline double fd_default_step(const Vec& beta) {
    double scale = beta.size() > 0 ? beta.cwiseAbs().maxCoeff() : 0.0;
    return 1e-5 * (1.0 + scale);
}

// Larger default for differentiating composite counter-term fields.
inline double field_jvp_default_step(const Vec& beta) {
    double scale = beta.size() > 0 ? beta.cwiseAbs().maxCoeff() : 0.0;
    return 1e-4 * (1.0 + scale);
}

namespace detail {

inline void check_cancellation(double diff_norm, double value_norm, double h,
                               const WarnSink& warn, const char* what) {
    const double eps = std::numeric_limits<double>::epsilon();
    if (value_norm > 0.0 && diff_norm <= 64.0 * eps * value_norm) {
        emit_warning(warn, std::string(what) + ": step h=" + std::to_string(h) +
                               " too small, central difference is at rounding level");
    }
}

}  // namespace detail

// Directional derivative of an arbitrary vector field along `dir`,
// (d/ds) F(beta + s*dir) at s=0, by a symmetric difference along the unit
// direction scaled back by |dir|.
inline Vec field_jvp(const std::function<Vec(const Vec&)>& field, const Vec& beta,
                     const Vec& dir, double h = 0.0, const WarnSink& warn = {}) {
    if (h < 0.0) throw std::invalid_argument("field_jvp: step must be positive");
    const double norm = dir.norm();
    if (norm == 0.0) return Vec::Zero(beta.size());
    if (h == 0.0) h = field_jvp_default_step(beta);
    const Vec unit = dir / norm;
    const Vec fp = field(beta + h * unit);
    const Vec fm = field(beta - h * unit);
    detail::check_cancellation((fp - fm).norm(), fp.norm() + fm.norm(), h, warn,
                               "field_jvp");
    return (fp - fm) * (norm / (2.0 * h));
}

}  // namespace hbflow
