#include <catch2/catch_amalgamated.hpp>

#include "hbflow/mlp.hpp"
#include "hbflow/problem.hpp"
#include "support/random_points.hpp"

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

}  // namespace

TEST_CASE("two_d loss/grad/hvp/t3 at the reference point") {
    const Problem p = make_two_d(1.0, 0.6);
    const Vec b = v2(2.8, 3.5);

    // (2.8*3.5 - 0.6)^2 / 2 = 9.2^2 / 2
    CHECK(eval_loss(p, b) == Approx(42.32).epsilon(1e-14));

    const Vec g = grad(p, b);
    CHECK(g[0] == Approx(32.2).epsilon(1e-14));
    CHECK(g[1] == Approx(25.76).epsilon(1e-14));

    // Hessian [[a2^2, 2 a1 a2 - y], [., a1^2]] applied to e1.
    const Vec h = hvp(p, b, v2(1, 0));
    CHECK(h[0] == Approx(12.25).epsilon(1e-14));
    CHECK(h[1] == Approx(19.0).epsilon(1e-14));

    // Third derivatives of the quartic: T[e1,e1] = (0, 2 a2).
    const Vec t = t3(p, b, v2(1, 0), v2(1, 0));
    CHECK(t[0] == 0.0);
    CHECK(t[1] == Approx(7.0).epsilon(1e-14));
}

TEST_CASE("quadratic problem basics") {
    Mat A(2, 2);
    A << 2, 0, 0, 1;
    const Problem p = make_quadratic(A, Vec::Zero(2));

    CHECK(eval_loss(p, Vec::Zero(2)) == 0.0);
    const Vec g = grad(p, v2(1, 1));
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 1.0);
    // Constant Hessian: hvp independent of beta.
    CHECK((hvp(p, v2(5, -3), v2(1, 2)) - hvp(p, Vec::Zero(2), v2(1, 2))).norm() == 0.0);
    // Vanishing third derivatives.
    CHECK(t3(p, v2(1, 1), v2(1, 2), v2(3, 4)).norm() == 0.0);
    CHECK(hvp(p, v2(1, 1), Vec::Zero(2)).norm() == 0.0);
}

TEST_CASE("stationary points have zero gradient and omegas") {
    const Problem p = make_two_d(1.0, 0.6);
    // a1 a2 = y: on the global-minimum hyperbola.
    const Vec b = v2(1.2, 0.5);
    CHECK(grad(p, b).norm() == Approx(0.0).margin(1e-15));
    CHECK(omega1(p, b).norm() == Approx(0.0).margin(1e-14));
    CHECK(omega2(p, b).norm() == Approx(0.0).margin(1e-14));
}

TEST_CASE("dimension mismatches are rejected") {
    const Problem p = make_two_d(1.0, 0.6);
    Vec bad(3);
    bad << 1, 2, 3;
    CHECK_THROWS_AS(eval_loss(p, bad), std::invalid_argument);
    CHECK_THROWS_AS(grad(p, bad), std::invalid_argument);
    CHECK_THROWS_AS(hvp(p, v2(1, 1), bad), std::invalid_argument);
    CHECK_THROWS_AS(t3(p, v2(1, 1), bad, v2(0, 1)), std::invalid_argument);
    Mat notsym(2, 2);
    notsym << 1, 2, 3, 4;
    CHECK_THROWS_AS(make_quadratic(notsym, Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("hvp symmetry u.H v = v.H u on random samples") {
    testsup::PointGen gen(42);
    for (const Problem& p : {make_two_d(1.0, 0.6), make_two_d(-0.7, 1.3)}) {
        for (int i = 0; i < 100; ++i) {
            const Vec b = gen.vec(2, -3, 3);
            const Vec u = gen.vec(2), v = gen.vec(2);
            const double lhs = u.dot(hvp(p, b, v));
            const double rhs = v.dot(hvp(p, b, u));
            REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + u.norm() * v.norm()));
        }
    }
}

TEST_CASE("t3 symmetry in the two directions") {
    testsup::PointGen gen(43);
    const Problem p = make_two_d(1.0, 0.6);
    for (int i = 0; i < 100; ++i) {
        const Vec b = gen.vec(2, -3, 3);
        const Vec u = gen.vec(2), v = gen.vec(2);
        REQUIRE((t3(p, b, u, v) - t3(p, b, v, u)).norm() <= 1e-12);
    }
}

TEST_CASE("fd oracle agrees with analytic derivatives") {
    testsup::PointGen gen(44);
    Mat A(3, 3);
    A << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
    const Problem quad = make_quadratic(A, gen.vec(3));
    const Problem twod = make_two_d(1.0, 0.6);

    SECTION("fd grad of quadratic matches to 1e-8") {
        for (int i = 0; i < 20; ++i) {
            const Vec b = gen.vec(3);
            REQUIRE(rel_err(fd_oracle(quad, b, FdKind::Grad, {}), grad(quad, b)) <= 1e-8);
        }
    }
    SECTION("fd grad/hvp of two_d match to 1e-5 / 1e-6") {
        for (int i = 0; i < 50; ++i) {
            const Vec b = gen.vec(2, -2, 2);
            const Vec dir = gen.vec(2);
            REQUIRE(rel_err(fd_oracle(twod, b, FdKind::Grad, {}), grad(twod, b)) <= 1e-5);
            REQUIRE(rel_err(fd_oracle(twod, b, FdKind::Hvp, {dir}), hvp(twod, b, dir)) <=
                    1e-6);
        }
    }
    SECTION("fd t3 matches analytic t3 to 1e-4, and vanishes on quadratics") {
        for (int i = 0; i < 50; ++i) {
            const Vec b = gen.vec(2, -2, 2);
            const Vec u = gen.vec(2), v = gen.vec(2);
            REQUIRE(rel_err(fd_oracle(twod, b, FdKind::T3, {u, v}), t3(twod, b, u, v)) <=
                    1e-4);
        }
        const Vec b = gen.vec(3), u = gen.vec(3), v = gen.vec(3);
        REQUIRE(fd_oracle(quad, b, FdKind::T3, {u, v}).norm() <= 1e-6);
    }
}

TEST_CASE("omega2 equals H^2 g + T[g,g] and matches the composite fd oracle") {
    // Independent route: grad of s(b) = g.(Hg)/2 equals (omega1 + omega2)/2,
    // so omega2 = 2 * fd_grad(s) - omega1.
    const Problem p = make_two_d(1.0, 0.6);
    testsup::PointGen gen(45);
    for (int i = 0; i < 20; ++i) {
        const Vec b = gen.vec(2, -2, 2);
        const Vec g = grad(p, b);
        const Vec direct = hvp(p, b, hvp(p, b, g)) + t3(p, b, g, g);
        REQUIRE((omega2(p, b) - direct).norm() == 0.0);  // same construction

        Problem composite;
        composite.dim = 2;
        composite.label = "g.Hg/2";
        composite.value_fn = [&p](const Vec& x) {
            const Vec gg = grad(p, x);
            return 0.5 * gg.dot(hvp(p, x, gg));
        };
        const Vec fd_s = [&] {
            Vec out(2);
            const double h = 1e-5 * (1.0 + b.cwiseAbs().maxCoeff());
            for (int j = 0; j < 2; ++j) {
                Vec e = Vec::Zero(2);
                e[j] = h;
                out[j] = (composite.value_fn(b + e) - composite.value_fn(b - e)) / (2 * h);
            }
            return out;
        }();
        const Vec via_fd = 2.0 * fd_s - omega1(p, b);
        REQUIRE(rel_err(omega2(p, b), via_fd) <= 1e-6);
    }
}

TEST_CASE("omega identities on quadratics") {
    Mat A(2, 2);
    A << 2, 0, 0, 1;
    const Problem p = make_quadratic(A, Vec::Zero(2));
    const Vec b = v2(1, 1);
    const Vec g = grad(p, b);  // A b
    // omega1 = A(Ag), omega2 = A^2 g with T = 0: equal for symmetric A.
    CHECK((omega1(p, b) - Vec(A * (A * g))).norm() <= 1e-14);
    CHECK((omega2(p, b) - omega1(p, b)).norm() == 0.0);
}

TEST_CASE("fd warning channel reports cancellation, never silently") {
    const Problem p = make_two_d(1.0, 0.6);
    std::vector<std::string> warnings;
    WarnSink sink = [&](const std::string& w) { warnings.push_back(w); };
    (void)fd_oracle(p, v2(2.8, 3.5), FdKind::Grad, {}, 1e-14, sink);
    CHECK(!warnings.empty());
    CHECK_THROWS_AS(fd_oracle(p, v2(1, 1), FdKind::Grad, {}, -1.0), std::invalid_argument);
}

TEST_CASE("mlp problem: analytic gradient matches fd, oracles are consistent") {
    MlpSpec spec;
    spec.input_dim = 3;
    spec.hidden = 8;
    spec.samples = 16;
    spec.seed = 7;
    const Problem p = make_mlp_problem(spec);
    const Vec theta = make_mlp_initial_point(spec);
    REQUIRE(theta.size() == p.dim);

    const Vec g = grad(p, theta);
    const Vec g_fd = fd_oracle(p, theta, FdKind::Grad, {});
    REQUIRE(rel_err(g, g_fd) <= 1e-6);

    // hvp is fd-backed; check approximate symmetry only.
    testsup::PointGen gen(46);
    const Vec u = gen.vec(p.dim), v = gen.vec(p.dim);
    const double lhs = u.dot(hvp(p, theta, v));
    const double rhs = v.dot(hvp(p, theta, u));
    REQUIRE(std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(lhs)));
}
