#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hbflow/errors.hpp"
#include "hbflow/problem.hpp"
#include "hbflow/trajectory.hpp"

namespace hbflow {

/// State of a discrete optimizer run. At k=0, beta_prev equals beta, which
/// encodes zero initial momentum: the first heavy-ball update is then a pure
/// gradient step.
struct DiscreteState {
    Vec beta;
    Vec beta_prev;
    long k = 0;
    double eta = 0.0;
    double mu = 0.0;
};

inline DiscreteState make_initial_state(const Vec& beta0, double eta, double mu) {
    if (eta <= 0.0) throw std::invalid_argument("discrete: eta must be positive");
    if (mu < 0.0 || mu >= 1.0)
        throw std::invalid_argument("discrete: mu must lie in [0,1)");
    return DiscreteState{beta0, beta0, 0, eta, mu};
}

namespace detail {

inline void require_finite(const Vec& g, long k, const char* what) {
    if (!g.allFinite()) {
        std::ostringstream os;
        os << what << ": non-finite gradient at iteration " << k;
        throw DivergenceError(os.str());
    }
}

}  // namespace detail

/// beta_{k+1} = beta_k - eta * grad L(beta_k) + mu * (beta_k - beta_{k-1}).
inline DiscreteState hb_step(const DiscreteState& s, const Problem& p) {
    const Vec g = grad(p, s.beta);
    detail::require_finite(g, s.k, "hb_step");
    DiscreteState next;
    next.eta = s.eta;
    next.mu = s.mu;
    next.k = s.k + 1;
    next.beta_prev = s.beta;
    if (s.mu == 0.0) {
        // Skip the momentum term entirely so mu=0 reproduces gd_step bitwise.
        next.beta = s.beta - s.eta * g;
    } else {
        next.beta = s.beta - s.eta * g + s.mu * (s.beta - s.beta_prev);
    }
    return next;
}

/// beta_{k+1} = beta_k - eta * grad L(beta_k).
inline DiscreteState gd_step(const DiscreteState& s, const Problem& p) {
    const Vec g = grad(p, s.beta);
    detail::require_finite(g, s.k, "gd_step");
    DiscreteState next;
    next.eta = s.eta;
    next.mu = s.mu;
    next.k = s.k + 1;
    next.beta_prev = s.beta;
    next.beta = s.beta - s.eta * g;
    return next;
}

enum class Optimizer { Gd, Hb };

struct RunOptions {
    double divergence_bound = 1e8;
};

inline Trajectory run_discrete(Optimizer opt, const Problem& p, const Vec& beta0,
                               double eta, double mu, long n_steps,
                               const RunOptions& opts = {}) {
    if (n_steps < 0) throw std::invalid_argument("run_discrete: N must be >= 0");
    DiscreteState s = make_initial_state(beta0, eta, opt == Optimizer::Gd ? 0.0 : mu);
    Trajectory traj;
    traj.label = opt == Optimizer::Gd ? "gd" : "hb";
    traj.push(0.0, s.beta);
    for (long k = 0; k < n_steps; ++k) {
        s = opt == Optimizer::Gd ? gd_step(s, p) : hb_step(s, p);
        if (!s.beta.allFinite() || s.beta.cwiseAbs().maxCoeff() > opts.divergence_bound) {
            std::ostringstream os;
            os << "run_discrete(" << traj.label << "): diverged at iteration " << s.k
               << " (|beta|max > " << opts.divergence_bound << ")";
            throw DivergenceError(os.str());
        }
        traj.push(static_cast<double>(s.k) * eta, s.beta);
    }
    return traj;
}

}  // namespace hbflow
