#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hbflow/diagnostics.hpp"
#include "hbflow/flows.hpp"
#include "hbflow/problem.hpp"

using namespace hbflow;
using Catch::Approx;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

double rel_err(const Vec& got, const Vec& want) {
    const double scale = std::max(1e-30, want.norm());
    return (got - want).norm() / scale;
}

FlowConfig flow_cfg(FlowKind kind, int alpha, double mu, double eta, int substeps,
                    Integrator integ = Integrator::Euler,
                    CtMode mode = CtMode::FiniteK) {
    FlowConfig f;
    f.kind = kind;
    f.alpha = alpha;
    f.mu = mu;
    f.eta = eta;
    f.substeps = substeps;
    f.integrator = integ;
    f.ct.mode = mode;
    return f;
}

}  // namespace

TEST_CASE("flow right-hand sides") {
    const Problem p = make_two_d(1.0, 0.6);
    const Vec b = v2(2.8, 3.5);
    const Vec g = grad(p, b);

    SECTION("gf and rgf") {
        CHECK((flow_rhs(p, b, 0, flow_cfg(FlowKind::Gf, 1, 0.0, 1e-2, 1)) + g).norm() ==
              0.0);
        CHECK(rel_err(flow_rhs(p, b, 0, flow_cfg(FlowKind::Rgf, 1, 0.7, 1e-2, 1)),
                      Vec(-g / 0.3)) <= 1e-15);
    }
    SECTION("hbf alpha=1 is the finite-k rescaled gradient; asymptotic equals rgf") {
        const Vec rhs_fin = flow_rhs(p, b, 3, flow_cfg(FlowKind::Hbf, 1, 0.7, 1e-2, 1));
        const double a3 = (1.0 - std::pow(0.7, 4.0)) / 0.3;
        CHECK(rel_err(rhs_fin, Vec(-a3 * g)) <= 1e-15);
        const Vec rhs_asym = flow_rhs(
            p, b, 3,
            flow_cfg(FlowKind::Hbf, 1, 0.7, 1e-2, 1, Integrator::Euler, CtMode::Asymptotic));
        CHECK((rhs_asym -
               flow_rhs(p, b, 3, flow_cfg(FlowKind::Rgf, 1, 0.7, 1e-2, 1)))
                  .norm() == 0.0);
    }
    SECTION("hbf alpha=2 with mu=0 is the IGR right-hand side") {
        const double eta = 1e-2;
        const Vec rhs = flow_rhs(p, b, 5, flow_cfg(FlowKind::Hbf, 2, 0.0, eta, 1));
        const Vec want = -g - eta * 0.5 * hvp(p, b, g);
        CHECK(rel_err(rhs, want) <= 1e-14);
    }
    SECTION("stationary point gives zero rhs") {
        CHECK(flow_rhs(p, v2(1.2, 0.5), 7, flow_cfg(FlowKind::Hbf, 3, 0.7, 1e-2, 1)).norm() <=
              1e-13);
    }
}

TEST_CASE("integrate_segment basics") {
    Mat A = Mat::Identity(1, 1);
    const Problem p = make_quadratic(A, Vec::Zero(1));

    SECTION("single Euler substep on gf contracts by (1 - eta)") {
        FlowConfig f = flow_cfg(FlowKind::Gf, 1, 0.0, 0.25, 1);
        FlowState s{Vec::Ones(1), 0, 0.0};
        s = integrate_segment(p, s, f);
        CHECK(s.beta[0] == Approx(0.75).epsilon(1e-15));
        CHECK(s.k == 1);
        CHECK(s.t == Approx(0.25));
    }
    SECTION("zero rhs leaves the state unchanged") {
        FlowConfig f = flow_cfg(FlowKind::Gf, 1, 0.0, 0.25, 4);
        FlowState s{Vec::Zero(1), 0, 0.0};
        s = integrate_segment(p, s, f);
        CHECK(s.beta[0] == 0.0);
    }
    SECTION("euler approaches rk4 as substeps grow") {
        const Problem q = make_two_d(1.0, 0.6);
        FlowConfig fe = flow_cfg(FlowKind::Rgf, 1, 0.5, 0.1, 1);
        FlowConfig fr = flow_cfg(FlowKind::Rgf, 1, 0.5, 0.1, 64, Integrator::Rk4);
        const Vec b0 = v2(2.8, 3.5);
        const Vec ref = integrate_segment(q, {b0, 0, 0.0}, fr).beta;
        double prev_err = -1.0;
        for (int n : {1, 10, 100}) {
            fe.substeps = n;
            const Vec e = integrate_segment(q, {b0, 0, 0.0}, fe).beta;
            const double err = (e - ref).norm();
            if (prev_err > 0) CHECK(err < prev_err);
            prev_err = err;
        }
    }
}

TEST_CASE("run_flow sampling and guards") {
    const Problem p = make_two_d(1.0, 0.6);
    SECTION("N=0 gives a single point and eps_0 = 0") {
        const Trajectory t =
            run_flow(p, v2(2.8, 3.5), flow_cfg(FlowKind::Rgf, 1, 0.7, 5e-3, 10), 0);
        CHECK(t.times.size() == 1);
        CHECK((t.points[0] - v2(2.8, 3.5)).norm() == 0.0);
    }
    SECTION("grid times are exactly k*eta") {
        const Trajectory t =
            run_flow(p, v2(2.8, 3.5), flow_cfg(FlowKind::Rgf, 1, 0.7, 5e-3, 10), 7);
        t.validate();
        for (std::size_t k = 0; k < t.times.size(); ++k)
            REQUIRE(t.times[k] == static_cast<double>(k) * 5e-3);
    }
    SECTION("invalid configs rejected") {
        FlowConfig f = flow_cfg(FlowKind::Gf, 1, 0.3, 5e-3, 10);  // gf needs mu=0
        CHECK_THROWS_AS(run_flow(p, v2(2.8, 3.5), f, 2), std::invalid_argument);
        f = flow_cfg(FlowKind::Rgf, 1, 0.3, 5e-3, 0);
        CHECK_THROWS_AS(run_flow(p, v2(2.8, 3.5), f, 2), std::invalid_argument);
    }
    SECTION("dense sink sees every substep") {
        int count = 0;
        const DenseSink sink = [&](double, const Vec&) { ++count; };
        run_flow(p, v2(2.8, 3.5), flow_cfg(FlowKind::Rgf, 1, 0.7, 5e-3, 10), 3, sink);
        CHECK(count == 1 + 3 * 10);
    }
}

TEST_CASE("gf/rgf time-rescaling identity on a quadratic") {
    Mat A(2, 2);
    A << 2, 0.3, 0.3, 1;
    const Problem p = make_quadratic(A, Vec::Zero(2));
    const double mu = 0.7, eta = 0.02;
    const long n = 25;
    const Vec b0 = v2(1.0, -0.5);

    const Trajectory rgf =
        run_flow(p, b0, flow_cfg(FlowKind::Rgf, 1, mu, eta, 20, Integrator::Rk4), n);
    // gf on the stretched grid eta' = eta/(1-mu) visits the same states.
    const Trajectory gf = run_flow(
        p, b0, flow_cfg(FlowKind::Gf, 1, 0.0, eta / (1.0 - mu), 20, Integrator::Rk4), n);
    for (std::size_t k = 0; k < rgf.points.size(); ++k)
        REQUIRE((rgf.points[k] - gf.points[k]).norm() <= 1e-9);
}

TEST_CASE("substep refinement orders: Euler ~1, RK4 ~4") {
    const Problem p = make_two_d(1.0, 0.6);
    const double mu = 0.5, eta = 0.05;
    const long n = 10;
    const Vec b0 = v2(2.8, 3.5);
    const Trajectory ref = run_flow(
        p, b0, flow_cfg(FlowKind::Hbf, 2, mu, eta, 512, Integrator::Rk4), n);

    auto endpoint_err = [&](Integrator integ, int substeps) {
        const Trajectory t =
            run_flow(p, b0, flow_cfg(FlowKind::Hbf, 2, mu, eta, substeps, integ), n);
        return (t.points.back() - ref.points.back()).norm();
    };
    auto fit_slope = [&](Integrator integ, std::vector<int> ns) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int nn : ns) {
            const double x = std::log(1.0 / nn);
            const double y = std::log(endpoint_err(integ, nn));
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        const double m = static_cast<double>(ns.size());
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };

    CHECK_THAT(fit_slope(Integrator::Euler, {4, 8, 16, 32}),
               Catch::Matchers::WithinAbs(1.0, 0.4));
    CHECK_THAT(fit_slope(Integrator::Rk4, {1, 2, 4}),
               Catch::Matchers::WithinAbs(4.0, 0.4));
}

TEST_CASE("eps_0 is zero for every flow/discrete pairing") {
    const Problem p = make_two_d(1.0, 0.6);
    const Vec b0 = v2(2.8, 3.5);
    const Trajectory hb = run_discrete(Optimizer::Hb, p, b0, 5e-3, 0.7, 10);
    for (int alpha : {1, 2, 3}) {
        const Trajectory fl =
            run_flow(p, b0, flow_cfg(FlowKind::Hbf, alpha, 0.7, 5e-3, 10), 10);
        const ErrorSeries es = discretization_error(hb, fl);
        REQUIRE(es.eps_norm[0] == 0.0);
    }
}
