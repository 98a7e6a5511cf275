#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbflow/discrete.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/flows.hpp"
#include "hbflow/trajectory.hpp"

namespace hbflow {

/// Per-iteration discretization error |beta(t_k) - beta_k|_2 between a flow
/// trajectory and its discrete reference.
struct ErrorSeries {
    std::vector<long> k;
    std::vector<double> eps_norm;
    std::string discrete_label;
    std::string flow_label;
};

inline ErrorSeries discretization_error(const Trajectory& discrete,
                                        const Trajectory& flow) {
    if (discrete.times.size() != flow.times.size())
        throw std::invalid_argument("discretization_error: grid length mismatch");
    if (discrete.times.empty())
        throw std::invalid_argument("discretization_error: empty trajectories");
    if (discrete.dim() != flow.dim())
        throw std::invalid_argument("discretization_error: dimension mismatch");
    for (std::size_t i = 0; i < discrete.times.size(); ++i) {
        if (std::abs(discrete.times[i] - flow.times[i]) >
            1e-9 * (1.0 + std::abs(discrete.times[i])))
            throw std::invalid_argument("discretization_error: grids do not coincide");
    }
    if ((discrete.points[0] - flow.points[0]).norm() != 0.0)
        throw std::invalid_argument("discretization_error: runs must share the start point");

    ErrorSeries out;
    out.discrete_label = discrete.label;
    out.flow_label = flow.label;
    out.k.reserve(discrete.times.size());
    out.eps_norm.reserve(discrete.times.size());
    for (std::size_t i = 0; i < discrete.times.size(); ++i) {
        out.k.push_back(static_cast<long>(i));
        out.eps_norm.push_back((flow.points[i] - discrete.points[i]).norm());
    }
    return out;
}

struct OrderFit {
    double slope = 0.0;
    std::vector<double> eta;        // step sizes that produced valid points
    std::vector<double> eps;        // |eps_N| at the fixed horizon
    std::vector<double> residuals;  // per-point log-space fit residuals
    std::vector<std::string> warnings;
};

/// Fits the slope of log |eps(T)| vs log eta over an eta grid at a fixed
/// physical horizon T (so the number of iterations N = T/eta varies). The
/// discrete reference is heavy-ball with the flow's mu (plain gradient
/// descent when mu = 0). Diverged runs are excluded with a warning.
inline OrderFit estimate_order(const Problem& p, const Vec& beta0,
                               const FlowConfig& base, const std::vector<double>& eta_grid,
                               double t_total, const RunOptions& run_opts = {}) {
    if (eta_grid.size() < 4)
        throw std::invalid_argument("estimate_order: need at least 4 eta values");
    if (t_total <= 0.0) throw std::invalid_argument("estimate_order: T must be positive");

    const long transient =
        std::max<long>(5, static_cast<long>(std::ceil(1.0 / (1.0 - base.mu))));

    OrderFit fit;
    for (double eta : eta_grid) {
        const long n = std::lround(t_total / eta);
        if (n <= transient) {
            std::ostringstream os;
            os << "eta=" << eta << ": N=" << n << " does not clear the transient ("
               << transient << "), point skipped";
            fit.warnings.push_back(os.str());
            continue;
        }
        FlowConfig cfg = base;
        cfg.eta = eta;
        try {
            const Trajectory ref =
                run_discrete(base.mu == 0.0 ? Optimizer::Gd : Optimizer::Hb, p, beta0,
                             eta, base.mu, n, run_opts);
            const Trajectory flow = run_flow(p, beta0, cfg, n);
            const double err = (flow.points.back() - ref.points.back()).norm();
            if (err <= 0.0 || !std::isfinite(err)) {
                fit.warnings.push_back("eta=" + std::to_string(eta) +
                                       ": degenerate error, point skipped");
                continue;
            }
            fit.eta.push_back(eta);
            fit.eps.push_back(err);
        } catch (const DivergenceError& e) {
            fit.warnings.push_back("eta=" + std::to_string(eta) + ": " + e.what());
        }
    }

    const std::size_t m = fit.eta.size();
    if (m < 3)
        throw NotConvergedError("estimate_order: fewer than 3 valid points in the sweep",
                                static_cast<double>(m));

    // Least squares for log eps = slope * log eta + intercept.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = std::log(fit.eta[i]);
        const double y = std::log(fit.eps[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    fit.slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.slope * sx) / m;
    fit.residuals.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        fit.residuals[i] =
            std::log(fit.eps[i]) - (fit.slope * std::log(fit.eta[i]) + intercept);
    return fit;
}

/// Directional smoothness
///   D = grad L(b) . (grad L(b) - grad L(b - eta grad L(b))) / (eta |grad L(b)|^2),
/// the normalized gradient discrepancy across one gradient step. Saturates
/// near 2/eta when gradient descent reaches the edge of stability.
inline double directional_smoothness(const Problem& p, const Vec& beta, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("directional_smoothness: eta must be positive");
    const Vec g = grad(p, beta);
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) < 1e-12)
        throw std::invalid_argument(
            "directional_smoothness: undefined, |grad| below 1e-12");
    const Vec g_next = grad(p, Vec(beta - eta * g));
    return g.dot(g - g_next) / (eta * gnorm2);
}

}  // namespace hbflow
