#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hbflow/errors.hpp"
#include "hbflow/types.hpp"

namespace hbflow {

// ---------------------------------------------------------------------------
// Hyperbolic-entropy potential whose constrained minimizer over {Xw = y}
// characterizes the flow's limit point. Per component,
//
//   Lambda^gf_j(w; kappa_j) = 1/4 [ w_j asinh(w_j / 2 kappa_j)
//                                   - sqrt(4 kappa_j^2 + w_j^2) + 2 kappa_j ]
//
// interpolates between |w|_1 (small kappa) and an |w|_2-like quadratic
// (large kappa). The flow-corrected potential adds w_j * phi_j.
// ---------------------------------------------------------------------------

struct PotentialValue {
    double total = 0.0;
    Vec per_component;
};

inline PotentialValue potential_gf(const Vec& w, const Vec& kappa) {
    if (w.size() != kappa.size())
        throw std::invalid_argument("potential_gf: size mismatch");
    if ((kappa.array() <= 0.0).any())
        throw std::invalid_argument("potential_gf: kappa must be positive componentwise");
    PotentialValue out;
    out.per_component.resize(w.size());
    for (int j = 0; j < w.size(); ++j) {
        const double k2 = 2.0 * kappa[j];
        out.per_component[j] =
            0.25 * (w[j] * std::asinh(w[j] / k2) -
                    std::sqrt(k2 * k2 + w[j] * w[j]) + k2);
    }
    out.total = out.per_component.sum();
    return out;
}

inline double potential_hbf(const Vec& w, const Vec& kappa, const Vec& phi) {
    if (phi.size() != w.size()) throw std::invalid_argument("potential_hbf: size mismatch");
    return potential_gf(w, kappa).total + w.dot(phi);
}

/// grad_w Lambda, componentwise 1/4 asinh(w_j / 2 kappa_j) + phi_j.
inline Vec potential_gradient(const Vec& w, const Vec& kappa, const Vec& phi) {
    if (w.size() != kappa.size() || phi.size() != w.size())
        throw std::invalid_argument("potential_gradient: size mismatch");
    if ((kappa.array() <= 0.0).any())
        throw std::invalid_argument("potential_gradient: kappa must be positive");
    Vec g(w.size());
    for (int j = 0; j < w.size(); ++j)
        g[j] = 0.25 * std::asinh(w[j] / (2.0 * kappa[j])) + phi[j];
    return g;
}

namespace detail {

inline void check_data_matrix(const Mat& X, const char* what) {
    if (X.rows() == 0 || X.cols() == 0)
        throw std::invalid_argument(std::string(what) + ": empty data matrix");
    for (int i = 0; i < X.rows(); ++i)
        if (X.row(i).norm() == 0.0)
            throw std::invalid_argument(std::string(what) + ": zero row in X");
}

// Cholesky of X X^T; fails on rank-deficient X.
inline Eigen::LLT<Mat> gram_factor(const Mat& X, const char* what) {
    check_data_matrix(X, what);
    Eigen::LLT<Mat> llt(Mat(X * X.transpose()));
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(std::string(what) + ": X is rank deficient");
    return llt;
}

}  // namespace detail

/// Norm of the potential gradient's component outside the row space of X at
/// the trained solution, relative to the gradient norm. Zero at an exact
/// constrained minimizer.
inline double kkt_residual(const Vec& w_inf, const Vec& kappa, const Vec& phi,
                           const Mat& X) {
    if (X.cols() != w_inf.size()) throw std::invalid_argument("kkt_residual: size mismatch");
    const Vec g = potential_gradient(w_inf, kappa, phi);
    auto llt = detail::gram_factor(X, "kkt_residual");
    const Vec c_star = llt.solve(X * g);
    const double gnorm = g.norm();
    if (gnorm == 0.0) return 0.0;
    return (g - X.transpose() * c_star).norm() / gnorm;
}

struct SolveOptions {
    long max_iterations = 2000000;
    double step_tolerance = 1e-10;
    long reproject_every = 64;
};

/// arg min_w Lambda(w; kappa) + w . phi  s.t.  X w = y, by projected gradient
/// with Armijo backtracking on the affine solution set. Lambda is strictly
/// convex (its per-component curvature 1/(4 sqrt(w^2 + 4 kappa^2)) is
/// positive), so the minimizer is unique.
inline Vec solve_constrained_potential(const Mat& X, const Vec& y, const Vec& kappa,
                                       const Vec& phi, const SolveOptions& opts = {}) {
    if (y.size() != X.rows()) throw std::invalid_argument("solve_constrained_potential: y size");
    if (kappa.size() != X.cols() || phi.size() != X.cols())
        throw std::invalid_argument("solve_constrained_potential: kappa/phi size");
    if (X.rows() >= X.cols())
        throw std::invalid_argument("solve_constrained_potential: requires n < d");
    auto llt = detail::gram_factor(X, "solve_constrained_potential");

    auto project_null = [&](const Vec& v) -> Vec {
        return v - X.transpose() * llt.solve(X * v);
    };
    auto objective = [&](const Vec& w) { return potential_hbf(w, kappa, phi); };

    // Feasible start: the min-norm particular solution.
    Vec w = X.transpose() * llt.solve(y);

    // The curvature is bounded by 1/(8 min kappa); its inverse is a safe
    // first trial step, grown on success so flat regions still make progress.
    double step = 8.0 * kappa.minCoeff();
    double fw = objective(w);
    for (long it = 0; it < opts.max_iterations; ++it) {
        const Vec dir = project_null(potential_gradient(w, kappa, phi));
        const double dir_norm2 = dir.squaredNorm();

        double t = step;
        Vec w_next;
        double f_next = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            w_next = w - t * dir;
            f_next = objective(w_next);
            if (f_next <= fw - 1e-4 * t * dir_norm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No descent even at a tiny step: gradient is at rounding level.
            break;
        }
        const double step_norm = (w_next - w).norm();
        w = w_next;
        fw = f_next;
        step = std::min(t * 2.0, 1e6);
        if ((it + 1) % opts.reproject_every == 0)
            w += X.transpose() * llt.solve(y - X * w);
        if (step_norm < opts.step_tolerance) {
            w += X.transpose() * llt.solve(y - X * w);
            return w;
        }
    }
    const double res = project_null(potential_gradient(w, kappa, phi)).norm();
    if (res < 1e-8 * std::max(1.0, potential_gradient(w, kappa, phi).norm())) {
        w += X.transpose() * llt.solve(y - X * w);
        return w;
    }
    std::ostringstream os;
    os << "solve_constrained_potential: no convergence after " << opts.max_iterations
       << " iterations (projected gradient norm " << res << ")";
    throw NotConvergedError(os.str(), res);
}

/// Closed-form minimum-l2-norm solution of Xw = y.
inline Vec min_l2_solution(const Mat& X, const Vec& y) {
    auto llt = detail::gram_factor(X, "min_l2_solution");
    return X.transpose() * llt.solve(y);
}

}  // namespace hbflow
