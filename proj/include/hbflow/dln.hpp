#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hbflow/counterterms.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/flows.hpp"
#include "hbflow/problem.hpp"
#include "hbflow/trajectory.hpp"

namespace hbflow {

// ---------------------------------------------------------------------------
// Diagonal linear network: predictor f(x) = x . w with the reparameterization
// w = w+ o w+ - w- o w- and squared loss |Xw - y|^2 / (2n), n < d.
// ---------------------------------------------------------------------------

struct DLNModel {
    Mat X;
    Vec y;
    Vec w_plus;
    Vec w_minus;

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(X.cols()); }

    void validate() const {
        if (y.size() != X.rows()) throw std::invalid_argument("dln: y size mismatch");
        if (w_plus.size() != X.cols() || w_minus.size() != X.cols())
            throw std::invalid_argument("dln: parameter size mismatch");
        if (X.rows() >= X.cols())
            throw std::invalid_argument("dln: requires n < d (overparameterized)");
    }

    Vec w() const { return w_plus.array().square() - w_minus.array().square(); }
    Vec v() const { return w_plus.array().square() + w_minus.array().square(); }
    Vec kappa() const { return w_plus.array() * w_minus.array(); }
    Vec residual() const { return X * w() - y; }
    double loss() const { return residual().squaredNorm() / (2.0 * n()); }
    Vec grad_w() const { return X.transpose() * residual() / n(); }
};

struct DlnGrads {
    Vec w;      // grad_w L = X^T r / n
    Vec plus;   // grad_{w+} L =  2 w+ o grad_w L
    Vec minus;  // grad_{w-} L = -2 w- o grad_w L
};

inline DlnGrads dln_grads(const DLNModel& m) {
    m.validate();
    DlnGrads g;
    g.w = m.grad_w();
    g.plus = 2.0 * m.w_plus.array() * g.w.array();
    g.minus = -2.0 * m.w_minus.array() * g.w.array();
    return g;
}

namespace detail {

inline void check_nonzero_components(const Vec& wp, const Vec& wm, const char* what) {
    std::vector<int> bad;
    for (int j = 0; j < wp.size(); ++j)
        if (wp[j] == 0.0 || wm[j] == 0.0) bad.push_back(j);
    if (!bad.empty()) {
        std::ostringstream os;
        os << what << ": zero w+/- component(s) at indices";
        for (int j : bad) os << ' ' << j;
        throw SingularComponentError(os.str(), bad);
    }
}

// gamma^{w+-} / (coef * w+-) without the momentum coefficient:
//   (4/n^2) [ (X^T r)_j^2 +- 2 (X^T X (w_{+-}^2 o X^T r))_j ].
inline std::pair<Vec, Vec> dln_base_ratios(const Mat& X, const Vec& y, const Vec& wp,
                                           const Vec& wm) {
    const double n = static_cast<double>(X.rows());
    const Vec w = wp.array().square() - wm.array().square();
    const Vec s = X.transpose() * (X * w - y);  // X^T r
    const Vec cross_p = X.transpose() * (X * Vec(wp.array().square() * s.array()));
    const Vec cross_m = X.transpose() * (X * Vec(wm.array().square() * s.array()));
    const double scale = 4.0 / (n * n);
    Vec ratio_p = scale * (s.array().square() + 2.0 * cross_p.array());
    Vec ratio_m = scale * (s.array().square() - 2.0 * cross_m.array());
    return {ratio_p, ratio_m};
}

}  // namespace detail

/// Componentwise ratios gamma^{w+-}_j / w_{+-;j} of the order-2 correction
/// fields,
///   2(1+mu)/((1-mu)^3 n^2) [ (X^T r)_j^2 +- 2 (X^T X (w_{+-}^2 o X^T r))_j ].
/// The momentum coefficient can be overridden (finite-k mode) via `coef`; by
/// default it is the large-k value (1+mu)/(2(1-mu)^3).
inline std::pair<Vec, Vec> gamma_w_over_w(const DLNModel& m, double mu,
                                          double coef = -1.0) {
    m.validate();
    detail::check_nonzero_components(m.w_plus, m.w_minus, "gamma_w_over_w");
    if (coef < 0.0) coef = ct_sigma0_coefficient_asymptotic(mu);
    auto [rp, rm] = detail::dln_base_ratios(m.X, m.y, m.w_plus, m.w_minus);
    return {Vec(coef * rp), Vec(coef * rm)};
}

/// The correction fields themselves: gamma^{w+-} = (gamma/w) o w.
inline std::pair<Vec, Vec> dln_correction_fields(const DLNModel& m, double mu,
                                                 double coef = -1.0) {
    auto [rp, rm] = gamma_w_over_w(m, mu, coef);
    return {Vec(rp.array() * m.w_plus.array()), Vec(rm.array() * m.w_minus.array())};
}

// ---------------------------------------------------------------------------
// The DLN as a Problem over the stacked vector z = [w+; w-], with analytic
// gradient, Hessian-vector product and third-order contraction. Used for
// discrete GD/HB training and for the generic flow machinery.
// ---------------------------------------------------------------------------

inline DLNModel dln_with_params(const DLNModel& base, const Vec& z) {
    DLNModel m = base;
    const int d = base.d();
    m.w_plus = z.head(d);
    m.w_minus = z.tail(d);
    return m;
}

inline Vec dln_stack(const DLNModel& m) {
    Vec z(2 * m.d());
    z.head(m.d()) = m.w_plus;
    z.tail(m.d()) = m.w_minus;
    return z;
}

inline Problem make_dln_problem(const DLNModel& base) {
    base.validate();
    const int d = base.d();
    const double n = base.n();
    auto X = std::make_shared<Mat>(base.X);
    auto y = std::make_shared<Vec>(base.y);

    Problem p;
    p.dim = 2 * d;
    p.label = "dln";
    p.value_fn = [X, y, d, n](const Vec& z) {
        const Vec w = z.head(d).array().square() - z.tail(d).array().square();
        return (*X * w - *y).squaredNorm() / (2.0 * n);
    };
    p.grad_fn = [X, y, d, n](const Vec& z) {
        const auto wp = z.head(d).array();
        const auto wm = z.tail(d).array();
        const Vec w = wp.square() - wm.square();
        const Vec u = X->transpose() * (*X * w - *y) / n;
        Vec g(2 * d);
        g.head(d) = 2.0 * wp * u.array();
        g.tail(d) = -2.0 * wm * u.array();
        return g;
    };
    p.hvp_fn = [X, y, d, n](const Vec& z, const Vec& dir) {
        const auto wp = z.head(d).array();
        const auto wm = z.tail(d).array();
        const auto pp = dir.head(d).array();
        const auto qq = dir.tail(d).array();
        const Vec w = wp.square() - wm.square();
        const Vec u = X->transpose() * (*X * w - *y) / n;
        const Vec dw = 2.0 * (wp * pp - wm * qq);
        const Vec du = X->transpose() * (*X * dw) / n;
        Vec h(2 * d);
        h.head(d) = 2.0 * pp * u.array() + 2.0 * wp * du.array();
        h.tail(d) = -2.0 * qq * u.array() - 2.0 * wm * du.array();
        return h;
    };
    p.t3_fn = [X, d, n](const Vec& z, const Vec& dir1, const Vec& dir2) {
        const auto wp = z.head(d).array();
        const auto wm = z.tail(d).array();
        const auto pp = dir1.head(d).array();
        const auto qq = dir1.tail(d).array();
        const auto bp = dir2.head(d).array();
        const auto bm = dir2.tail(d).array();
        const Vec du = X->transpose() * (*X * Vec(2.0 * (wp * pp - wm * qq))) / n;
        const Vec uprime = X->transpose() * (*X * Vec(2.0 * (wp * bp - wm * bm))) / n;
        const Vec duprime = X->transpose() * (*X * Vec(2.0 * (bp * pp - bm * qq))) / n;
        Vec t(2 * d);
        t.head(d) = 2.0 * pp * uprime.array() + 2.0 * bp * du.array() +
                    2.0 * wp * duprime.array();
        t.tail(d) = -2.0 * qq * uprime.array() - 2.0 * bm * du.array() -
                    2.0 * wm * duprime.array();
        return t;
    };
    return p;
}

// ---------------------------------------------------------------------------
// DLN flow runner. Integrates
//   dw+/dt = -G_k-scaled grad_{w+} L - eta gamma^{w+}
//   dw-/dt = -G_k-scaled grad_{w-} L - eta gamma^{w-}
// with the per-block correction fields above, accumulating the kappa/phi/Phi
// integrals by the trapezoidal rule on the substep grid as it goes (the
// integrands vary fastest early in training, and storing the dense
// trajectory of a long run would be prohibitive).
// ---------------------------------------------------------------------------

struct DlnFlowConfig {
    bool correction = true;  // false: plain rescaled gradient flow
    double mu = 0.0;
    double eta = 0.0;
    int substeps = 10;
    Integrator integrator = Integrator::Euler;
    CtMode mode = CtMode::Asymptotic;  // the corollary formulas use large-k forms
    double divergence_bound = 1e8;
    long grid_stride = 1;        // store every stride-th grid point
    double stop_loss_rtol = 0.0;  // stop once loss <= rtol * initial loss (0: never)

    void validate() const {
        if (eta <= 0.0) throw std::invalid_argument("dln flow: eta must be positive");
        if (substeps < 1) throw std::invalid_argument("dln flow: substeps must be >= 1");
        if (mu < 0.0 || mu >= 1.0)
            throw std::invalid_argument("dln flow: mu must lie in [0,1)");
        if (grid_stride < 1) throw std::invalid_argument("dln flow: grid_stride >= 1");
    }
};

struct DlnFlowResult {
    double eta = 0.0;
    double mu = 0.0;
    long n_segments = 0;
    Vec kappa0;

    // Sampled grid states (every grid_stride segments, plus the endpoint).
    std::vector<double> grid_times;
    std::vector<Vec> wp_grid, wm_grid;
    std::vector<Vec> kappa_formula_grid;  // kappa(0) o exp(-eta eps(t))

    // Trapezoid integrals at the final time on the substep grid, plus the
    // same integrals on the doubled grid for Richardson error estimates.
    Vec ratio_plus_integral, ratio_minus_integral;    // int gamma/w ds
    Vec ratio_plus_integral_c, ratio_minus_integral_c;
    Vec Phi, Phi_c;                                   // 4 int (d_{w_j} L)^2 ds

    double initial_loss = 0.0;
    double final_loss = 0.0;
    double max_kappa_mismatch = 0.0;  // max_j |kappa_formula - w+ o w-| over samples
    double max_v2_violation = 0.0;    // max_j |v^2 - w^2 - 4 kappa^2|

    Vec eps_integral() const {
        return ratio_plus_integral + ratio_minus_integral;
    }
    Vec phi_integral() const {
        return eta / 4.0 * (ratio_plus_integral - ratio_minus_integral);
    }
    // |I(dt) - I(2dt)|/3, the standard trapezoid Richardson estimate.
    Vec eps_integral_error_estimate() const {
        return ((ratio_plus_integral + ratio_minus_integral) -
                (ratio_plus_integral_c + ratio_minus_integral_c))
                   .cwiseAbs() /
               3.0;
    }
    Vec phi_integral_error_estimate() const {
        return eta / 4.0 *
               ((ratio_plus_integral - ratio_minus_integral) -
                (ratio_plus_integral_c - ratio_minus_integral_c))
                   .cwiseAbs() /
               3.0;
    }
    Vec Phi_error_estimate() const { return (Phi - Phi_c).cwiseAbs() / 3.0; }

    DLNModel final_model(const DLNModel& base) const {
        DLNModel m = base;
        m.w_plus = wp_grid.back();
        m.w_minus = wm_grid.back();
        return m;
    }
};

inline DlnFlowResult run_dln_flow(const DLNModel& model0, const DlnFlowConfig& cfg,
                                  long n_segments) {
    model0.validate();
    cfg.validate();
    if (n_segments < 0) throw std::invalid_argument("run_dln_flow: N must be >= 0");
    const int d = model0.d();
    const Mat& X = model0.X;
    const Vec& y = model0.y;
    const double dt = cfg.eta / cfg.substeps;

    DlnFlowResult res;
    res.eta = cfg.eta;
    res.mu = cfg.mu;
    res.n_segments = n_segments;
    res.kappa0 = model0.kappa();
    res.initial_loss = model0.loss();

    CtCoefficientTracker coefs(cfg.mu);

    auto rhs = [&](const Vec& z, double g_coef, double ct_coef) {
        const Vec wp = z.head(d);
        const Vec wm = z.tail(d);
        detail::check_nonzero_components(wp, wm, "run_dln_flow");
        const Vec w = wp.array().square() - wm.array().square();
        const Vec u = X.transpose() * (X * w - y) / X.rows();
        Vec out(2 * d);
        out.head(d) = (-g_coef * 2.0 * wp.array() * u.array()).matrix();
        out.tail(d) = (g_coef * 2.0 * wm.array() * u.array()).matrix();
        if (cfg.correction) {
            auto [rp, rm] = detail::dln_base_ratios(X, y, wp, wm);
            out.head(d) -= ((cfg.eta * ct_coef) * rp.array() * wp.array()).matrix();
            out.tail(d) -= ((cfg.eta * ct_coef) * rm.array() * wm.array()).matrix();
        }
        return out;
    };

    // Trapezoid accumulators on the substep grid. The integrand is piecewise
    // in k (the coefficients jump at segment boundaries in finite-k mode), so
    // each segment accumulates its own trapezoid with the boundary samples
    // evaluated under that segment's coefficient. `*_c` re-integrates on the
    // doubled step for the Richardson error estimate.
    Vec ip = Vec::Zero(d), im = Vec::Zero(d), phi4 = Vec::Zero(d);
    Vec ip_c = Vec::Zero(d), im_c = Vec::Zero(d), phi4_c = Vec::Zero(d);

    auto record_grid = [&](double t, const Vec& wp, const Vec& wm) {
        res.grid_times.push_back(t);
        res.wp_grid.push_back(wp);
        res.wm_grid.push_back(wm);
        const Vec eps = ip + im;
        const Vec kf = res.kappa0.array() * (-cfg.eta * eps.array()).exp();
        res.kappa_formula_grid.push_back(kf);
        const Vec kp = wp.array() * wm.array();
        res.max_kappa_mismatch =
            std::max(res.max_kappa_mismatch, (kf - kp).cwiseAbs().maxCoeff());
        const Vec v = wp.array().square() + wm.array().square();
        const Vec w = wp.array().square() - wm.array().square();
        res.max_v2_violation = std::max(
            res.max_v2_violation, (v.array().square() - w.array().square() -
                                   4.0 * kp.array().square())
                                      .abs()
                                      .maxCoeff());
    };

    Vec z = dln_stack(model0);
    record_grid(0.0, model0.w_plus, model0.w_minus);

    struct Sample {
        Vec rp, rm, u2;
    };
    auto sample_at = [&](const Vec& zz, double ct_coef) {
        const Vec wp = zz.head(d);
        const Vec wm = zz.tail(d);
        detail::check_nonzero_components(wp, wm, "run_dln_flow integrand");
        auto [rp, rm] = detail::dln_base_ratios(X, y, wp, wm);
        const Vec w = wp.array().square() - wm.array().square();
        const Vec u = X.transpose() * (X * w - y) / X.rows();
        return Sample{Vec(ct_coef * rp), Vec(ct_coef * rm),
                      Vec(u.array().square())};
    };

    for (long k = 0; k < n_segments; ++k) {
        coefs.advance();  // now holds the segment-k coefficients
        const double g_coef = cfg.mode == CtMode::FiniteK
                                  ? coefs.a
                                  : ct_g_coefficient_asymptotic(cfg.mu);
        const double ct_coef = !cfg.correction ? 0.0
                               : cfg.mode == CtMode::FiniteK
                                   ? coefs.c
                                   : ct_sigma0_coefficient_asymptotic(cfg.mu);
        auto bound_rhs = [&](const Vec& zz) { return rhs(zz, g_coef, ct_coef); };

        Sample prev = sample_at(z, ct_coef);
        Sample prev2 = prev;  // sample two substeps back, for the coarse grid
        for (int i = 0; i < cfg.substeps; ++i) {
            z = detail::substep(z, dt, cfg.integrator, bound_rhs);
            if (!z.allFinite() || z.cwiseAbs().maxCoeff() > cfg.divergence_bound)
                throw DivergenceError("run_dln_flow: diverged at segment " +
                                      std::to_string(k));
            Sample cur = sample_at(z, ct_coef);
            ip += dt / 2.0 * (prev.rp + cur.rp);
            im += dt / 2.0 * (prev.rm + cur.rm);
            phi4 += dt / 2.0 * (prev.u2 + cur.u2);
            const bool closes_pair = (i % 2 == 1);
            if (closes_pair) {
                ip_c += dt * (prev2.rp + cur.rp);  // trapezoid with step 2*dt
                im_c += dt * (prev2.rm + cur.rm);
                phi4_c += dt * (prev2.u2 + cur.u2);
            } else if (i == cfg.substeps - 1) {
                // Odd substep count: close the coarse grid with one dt-step.
                ip_c += dt / 2.0 * (prev.rp + cur.rp);
                im_c += dt / 2.0 * (prev.rm + cur.rm);
                phi4_c += dt / 2.0 * (prev.u2 + cur.u2);
            }
            if (closes_pair) prev2 = cur;
            prev = cur;
        }
        bool stop = false;
        if (cfg.stop_loss_rtol > 0.0) {
            const Vec w = z.head(d).array().square() - z.tail(d).array().square();
            const double loss = (X * w - y).squaredNorm() / (2.0 * X.rows());
            stop = loss <= cfg.stop_loss_rtol * res.initial_loss;
        }
        if ((k + 1) % cfg.grid_stride == 0 || k + 1 == n_segments || stop)
            record_grid((k + 1) * cfg.eta, Vec(z.head(d)), Vec(z.tail(d)));
        if (stop) {
            res.n_segments = k + 1;
            break;
        }
    }

    res.ratio_plus_integral = ip;
    res.ratio_minus_integral = im;
    res.Phi = 4.0 * phi4;
    res.ratio_plus_integral_c = ip_c;
    res.ratio_minus_integral_c = im_c;
    res.Phi_c = 4.0 * phi4_c;
    if (n_segments == 0) {
        res.final_loss = res.initial_loss;
    } else {
        DLNModel fin = model0;
        fin.w_plus = z.head(d);
        fin.w_minus = z.tail(d);
        res.final_loss = fin.loss();
    }
    return res;
}

// ---------------------------------------------------------------------------
// Corollary quantities and the phi correction
// ---------------------------------------------------------------------------

struct KappaSeries {
    std::vector<double> times;
    std::vector<Vec> formula;  // kappa(0) o exp(-eta eps(t))
    std::vector<Vec> product;  // w+(t) o w-(t)
};

inline KappaSeries kappa_trajectory(const DlnFlowResult& run) {
    KappaSeries s;
    s.times = run.grid_times;
    s.formula = run.kappa_formula_grid;
    s.product.reserve(run.grid_times.size());
    for (std::size_t i = 0; i < run.grid_times.size(); ++i)
        s.product.push_back(Vec(run.wp_grid[i].array() * run.wm_grid[i].array()));
    return s;
}

struct CorollaryQuantities {
    Vec Phi;                // 4 int (d_{w_j} L)^2 ds
    Vec q;                  // sqrt(w(T)^2 + 4 kappa(0)^2) - 2 kappa(0)
    Vec kappa_inf_formula;  // corollary closed form for kappa(T)
};

struct CorollaryOptions {
    double convergence_rtol = 1e-10;
    bool require_converged = true;
};

inline CorollaryQuantities corollary_quantities(const DlnFlowResult& run,
                                                const DLNModel& model0,
                                                const CorollaryOptions& opts = {}) {
    if (opts.require_converged &&
        run.final_loss > opts.convergence_rtol * run.initial_loss) {
        std::ostringstream os;
        os << "corollary_quantities: run not converged (final loss " << run.final_loss
           << ", initial " << run.initial_loss << ")";
        throw NotConvergedError(os.str(), run.final_loss);
    }
    const Vec kappa0 = model0.kappa();
    const Vec w_inf =
        run.wp_grid.back().array().square() - run.wm_grid.back().array().square();
    CorollaryQuantities out;
    out.Phi = run.Phi;
    out.q = (w_inf.array().square() + 4.0 * kappa0.array().square()).sqrt() -
            2.0 * kappa0.array();
    const double mu = run.mu, eta = run.eta;
    const double pref = eta * (1.0 + mu) / ((1.0 - mu) * (1.0 - mu));
    const Vec xxq = model0.X.transpose() * (model0.X * out.q) / model0.n();
    out.kappa_inf_formula =
        kappa0.array() *
        (pref * (-out.Phi.array() / (1.0 - mu) + xxq.array())).exp();
    return out;
}

struct PhiCorrection {
    Vec integral;     // eta/4 int (gamma+/w+ - gamma-/w-) ds
    Vec closed_form;  // -eta(1+mu)/(4(1-mu)^2 n) X^T X w(T)
};

/// Both routes to phi(T). At an interpolating endpoint (Xw = y) and w(0)=0
/// the closed form reduces to eta(1+mu)/(4(1-mu)^2) * grad_w L(0).
inline PhiCorrection phi_correction(const DlnFlowResult& run, const DLNModel& model0) {
    PhiCorrection out;
    out.integral = run.phi_integral();
    const Vec w_inf =
        run.wp_grid.back().array().square() - run.wm_grid.back().array().square();
    const double mu = run.mu, eta = run.eta;
    const double coef = eta * (1.0 + mu) / (4.0 * (1.0 - mu) * (1.0 - mu) * model0.n());
    out.closed_form = -coef * (model0.X.transpose() * (model0.X * w_inf));
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic sparse-regression datasets and initialization
// ---------------------------------------------------------------------------

struct DlnDataset {
    Mat X;
    Vec y;
    Vec w_star;
};

inline DlnDataset make_sparse_regression(int n, int d, int nnz, std::uint64_t seed) {
    if (n <= 0 || d <= 0 || nnz <= 0 || nnz > d)
        throw std::invalid_argument("make_sparse_regression: bad sizes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DlnDataset ds;
    ds.X.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ds.X(i, j) = gauss(rng);
    ds.w_star = Vec::Zero(d);
    std::vector<int> idx(d);
    for (int j = 0; j < d; ++j) idx[j] = j;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int j = 0; j < nnz; ++j) ds.w_star[idx[j]] = coin(rng) ? 1.0 : -1.0;
    ds.y = ds.X * ds.w_star;
    return ds;
}

/// Initialization with kappa(0) = s^2: symmetric for theta = 1, otherwise
/// w+ = theta s, w- = s / theta componentwise (kappa(0) preserved).
inline DLNModel dln_initialize(const DlnDataset& ds, double s, double theta = 1.0) {
    if (s <= 0.0 || theta <= 0.0)
        throw std::invalid_argument("dln_initialize: s and theta must be positive");
    DLNModel m;
    m.X = ds.X;
    m.y = ds.y;
    m.w_plus = Vec::Constant(ds.X.cols(), theta * s);
    m.w_minus = Vec::Constant(ds.X.cols(), s / theta);
    m.validate();
    return m;
}

/// Loads a dataset from CSV with header columns x_1..x_d,y.
inline DlnDataset load_dln_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_dln_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("load_dln_csv: empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header.back() != "y")
        throw std::runtime_error("load_dln_csv: expected columns x_1..x_d,y");
    const int d = static_cast<int>(header.size()) - 1;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != d + 1)
            throw std::runtime_error("load_dln_csv: ragged row");
        rows.push_back(std::move(row));
    }
    DlnDataset ds;
    const int n = static_cast<int>(rows.size());
    ds.X.resize(n, d);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.X(i, j) = rows[i][j];
        ds.y[i] = rows[i][d];
    }
    ds.w_star = Vec::Zero(d);
    return ds;
}

}  // namespace hbflow
