#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hbflow/fd.hpp"
#include "hbflow/types.hpp"

namespace hbflow {

/// An objective with derivative oracles. All oracles are pure functions of
/// beta; any dataset is captured at construction, so runs are replayable.
///
/// The derivative interface is contraction-based throughout: gradient,
/// Hessian-vector product, and the third-order bilinear contraction
/// t3(beta,u,v)_j = sum_{i,l} d^3 L / (db_j db_i db_l) u_i v_l.
/// Full tensors are never formed.
struct Problem {
    int dim = 0;
    std::string label;
    std::function<double(const Vec&)> value_fn;
    std::function<Vec(const Vec&)> grad_fn;
    std::function<Vec(const Vec&, const Vec&)> hvp_fn;
    std::function<Vec(const Vec&, const Vec&, const Vec&)> t3_fn;
};

namespace detail {

inline void check_dim(const Problem& p, const Vec& v, const char* what) {
    if (v.size() != p.dim)
        throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                    std::to_string(p.dim) + ", got " +
                                    std::to_string(v.size()) + " (" + p.label + ")");
}

}  // namespace detail

inline double eval_loss(const Problem& p, const Vec& beta) {
    detail::check_dim(p, beta, "eval_loss");
    return p.value_fn(beta);
}

inline Vec grad(const Problem& p, const Vec& beta) {
    detail::check_dim(p, beta, "grad");
    return p.grad_fn(beta);
}

inline Vec hvp(const Problem& p, const Vec& beta, const Vec& v) {
    detail::check_dim(p, beta, "hvp");
    detail::check_dim(p, v, "hvp direction");
    return p.hvp_fn(beta, v);
}

inline Vec t3(const Problem& p, const Vec& beta, const Vec& u, const Vec& v) {
    detail::check_dim(p, beta, "t3");
    detail::check_dim(p, u, "t3 direction u");
    detail::check_dim(p, v, "t3 direction v");
    return p.t3_fn(beta, u, v);
}

/// omega1 = (grad L . hess L) . hess L, i.e. H(Hg).
inline Vec omega1(const Problem& p, const Vec& beta) {
    const Vec g = grad(p, beta);
    return hvp(p, beta, hvp(p, beta, g));
}

/// omega2 = grad L . grad(grad L . hess L) = H^2 g + T[g,g].
inline Vec omega2(const Problem& p, const Vec& beta) {
    const Vec g = grad(p, beta);
    return hvp(p, beta, hvp(p, beta, g)) + t3(p, beta, g, g);
}

enum class FdKind { Grad, Hvp, T3 };

/// Central-difference oracle one derivative order below the requested kind:
/// fd grad differentiates values, fd hvp differentiates gradients, fd t3
/// differentiates Hessian-vector products. Used to verify the analytic
/// oracles independently.
inline Vec fd_oracle(const Problem& p, const Vec& beta, FdKind kind,
                     const std::vector<Vec>& directions, double h = 0.0,
                     const WarnSink& warn = {}) {
    detail::check_dim(p, beta, "fd_oracle");
    if (h < 0.0) throw std::invalid_argument("fd_oracle: step must be positive");
    if (h == 0.0) h = fd_default_step(beta);

    switch (kind) {
        case FdKind::Grad: {
            Vec out(p.dim);
            double fmag = 0.0, dmag = 0.0;
            for (int i = 0; i < p.dim; ++i) {
                Vec e = Vec::Zero(p.dim);
                e[i] = h;
                const double fp = p.value_fn(beta + e);
                const double fm = p.value_fn(beta - e);
                out[i] = (fp - fm) / (2.0 * h);
                fmag = std::max(fmag, std::abs(fp) + std::abs(fm));
                dmag = std::max(dmag, std::abs(fp - fm));
            }
            detail::check_cancellation(dmag, fmag, h, warn, "fd_oracle(grad)");
            return out;
        }
        case FdKind::Hvp: {
            if (directions.size() != 1)
                throw std::invalid_argument("fd_oracle(hvp): needs one direction");
            const Vec& v = directions[0];
            detail::check_dim(p, v, "fd_oracle(hvp) direction");
            const double norm = v.norm();
            if (norm == 0.0) return Vec::Zero(p.dim);
            const Vec unit = v / norm;
            const Vec gp = p.grad_fn(beta + h * unit);
            const Vec gm = p.grad_fn(beta - h * unit);
            detail::check_cancellation((gp - gm).norm(), gp.norm() + gm.norm(), h,
                                       warn, "fd_oracle(hvp)");
            return (gp - gm) * (norm / (2.0 * h));
        }
        case FdKind::T3: {
            if (directions.size() != 2)
                throw std::invalid_argument("fd_oracle(t3): needs two directions");
            const Vec& u = directions[0];
            const Vec& v = directions[1];
            detail::check_dim(p, u, "fd_oracle(t3) direction u");
            detail::check_dim(p, v, "fd_oracle(t3) direction v");
            const double norm = u.norm();
            if (norm == 0.0) return Vec::Zero(p.dim);
            const Vec unit = u / norm;
            const Vec hp = p.hvp_fn(beta + h * unit, v);
            const Vec hm = p.hvp_fn(beta - h * unit, v);
            detail::check_cancellation((hp - hm).norm(), hp.norm() + hm.norm(), h,
                                       warn, "fd_oracle(t3)");
            return (hp - hm) * (norm / (2.0 * h));
        }
    }
    throw std::logic_error("fd_oracle: unreachable");
}

/// The scalar regression model f(x; a1, a2) = a1*a2*x with squared loss
/// (f - y)^2 / 2. Every point with a1*a2*x = y is a global minimum.
inline Problem make_two_d(double x, double y) {
    Problem p;
    p.dim = 2;
    p.label = "two_d";
    p.value_fn = [x, y](const Vec& b) {
        const double r = b[0] * b[1] * x - y;
        return 0.5 * r * r;
    };
    p.grad_fn = [x, y](const Vec& b) {
        const double r = b[0] * b[1] * x - y;
        Vec g(2);
        g[0] = r * b[1] * x;
        g[1] = r * b[0] * x;
        return g;
    };
    p.hvp_fn = [x, y](const Vec& b, const Vec& v) {
        const double h11 = b[1] * b[1] * x * x;
        const double h22 = b[0] * b[0] * x * x;
        const double h12 = 2.0 * b[0] * b[1] * x * x - y * x;
        Vec out(2);
        out[0] = h11 * v[0] + h12 * v[1];
        out[1] = h12 * v[0] + h22 * v[1];
        return out;
    };
    p.t3_fn = [x](const Vec& b, const Vec& u, const Vec& v) {
        // Nonzero third derivatives: T_{112}=2*a2*x^2, T_{122}=2*a1*x^2
        // (and symmetric permutations).
        const double t112 = 2.0 * b[1] * x * x;
        const double t122 = 2.0 * b[0] * x * x;
        Vec out(2);
        out[0] = t112 * (u[0] * v[1] + u[1] * v[0]) + t122 * u[1] * v[1];
        out[1] = t112 * u[0] * v[0] + t122 * (u[0] * v[1] + u[1] * v[0]);
        return out;
    };
    return p;
}

/// L(beta) = beta.A.beta/2 - b.beta with symmetric A; constant Hessian and
/// vanishing third derivatives, so every counter-term closed form is exactly
/// checkable.
inline Problem make_quadratic(Mat A, Vec b) {
    if (A.rows() != A.cols()) throw std::invalid_argument("quadratic: A must be square");
    if (b.size() != A.rows()) throw std::invalid_argument("quadratic: b size mismatch");
    if (!A.isApprox(A.transpose(), 1e-12))
        throw std::invalid_argument("quadratic: A must be symmetric");
    const int d = static_cast<int>(A.rows());
    Problem p;
    p.dim = d;
    p.label = "quadratic";
    auto As = std::make_shared<Mat>(std::move(A));
    auto bs = std::make_shared<Vec>(std::move(b));
    p.value_fn = [As, bs](const Vec& beta) {
        return 0.5 * beta.dot(*As * beta) - bs->dot(beta);
    };
    p.grad_fn = [As, bs](const Vec& beta) { return Vec(*As * beta - *bs); };
    p.hvp_fn = [As](const Vec&, const Vec& v) { return Vec(*As * v); };
    p.t3_fn = [d](const Vec&, const Vec&, const Vec&) { return Vec(Vec::Zero(d)); };
    return p;
}

}  // namespace hbflow
