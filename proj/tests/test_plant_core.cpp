#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seqfo/bench.hpp"
#include "seqfo/farm.hpp"
#include "seqfo/plant.hpp"

using namespace seqfo;

namespace {

Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

/// Scalar plant x+ = 0.5 x + 0.25 u + 0.1 sin(u), y = x. Its steady-state
/// map is h(u) = 0.5 u + 0.2 sin(u), so h'(u) = 0.5 + 0.2 cos(u).
Plant scalar_plant(Vec w1 = Vec(), Vec w2 = Vec()) {
    return Plant(
        1, 1, 1,
        [](const Vec& x, const Vec& u) {
            return v1(0.5 * x(0) + 0.25 * u(0) + 0.1 * std::sin(u(0)));
        },
        [](const Vec& x, const Vec&) { return x; }, std::move(w1),
        std::move(w2));
}

Plant lti_plant() {
    return Plant(
        1, 1, 1,
        [](const Vec& x, const Vec& u) { return v1(0.5 * x(0) + 0.5 * u(0)); },
        [](const Vec& x, const Vec&) { return x; });
}

/// Re-wraps a plant's step/measure so linearize() has to fall back to
/// finite differences (the analytic maps are not carried over).
Plant strip_jacobians(const Plant& p) {
    return Plant(
        p.state_dim(), p.input_dim(), p.output_dim(),
        [&p](const Vec& x, const Vec& u) { return p.step(x, u); },
        [&p](const Vec& x, const Vec& u) { return p.measure(x, u); });
}

}  // namespace

TEST_CASE("finite_diff_jacobian: identity map gives the identity matrix") {
    Vec pt(2);
    pt << 0.3, -1.2;
    const Mat J = finite_diff_jacobian([](const Vec& v) { return v; }, pt);
    CHECK((J - Mat::Identity(2, 2)).norm() < 1e-9);
}

TEST_CASE("finite_diff_jacobian: quadratic map at (1,2)") {
    Vec pt(2);
    pt << 1.0, 2.0;
    const Mat J = finite_diff_jacobian(
        [](const Vec& v) {
            Vec out(2);
            out << v(0) * v(0), v(0) * v(1);
            return out;
        },
        pt, 1e-6);
    // Hand-differentiated Jacobian [[2 x0, 0], [x1, x0]] at (1,2).
    Mat expect(2, 2);
    expect << 2, 0, 2, 1;
    CHECK((J - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("finite_diff_jacobian: constant map gives zero") {
    Vec pt(3);
    pt << 1, 2, 3;
    const Mat J = finite_diff_jacobian(
        [](const Vec&) {
            Vec out(2);
            out << 4.0, -1.0;
            return out;
        },
        pt);
    CHECK(J.isZero(0.0));
}

TEST_CASE("finite_diff_jacobian: non-finite evaluation names the coordinate") {
    Vec pt(2);
    pt << 1.0, 1.0;
    try {
        finite_diff_jacobian(
            [](const Vec& v) {
                Vec out(1);
                out << (v(1) > 1.0 ? std::nan("") : 0.0);
                return out;
            },
            pt);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("Plant: constructor validates dimensions and jacobian sets") {
    auto f = [](const Vec& x, const Vec&) { return x; };
    CHECK_THROWS_AS(Plant(0, 1, 1, f, f), InvalidArgumentError);
    CHECK_THROWS_AS(Plant(1, 1, 1, nullptr, f), InvalidArgumentError);
    CHECK_THROWS_AS(Plant(1, 1, 1, f, f, v1(0.0), Vec::Zero(2)),
                    InvalidArgumentError);  // w2 has output_dim 1
    AnalyticJacobians partial;
    partial.fx = [](const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    CHECK_THROWS_AS(Plant(1, 1, 1, f, f, Vec(), Vec(), partial),
                    InvalidArgumentError);
}

TEST_CASE("Plant: step and measure fold in the constant disturbances") {
    Plant p = scalar_plant(v1(0.3), v1(-0.1));
    const Vec x = v1(1.0), u = v1(2.0);
    const double base = 0.5 * 1.0 + 0.25 * 2.0 + 0.1 * std::sin(2.0);
    CHECK(p.step(x, u)(0) == doctest::Approx(base + 0.3).epsilon(1e-15));
    CHECK(p.measure(x, u)(0) == doctest::Approx(1.0 - 0.1).epsilon(1e-15));
    // Determinism: repeated calls agree bitwise.
    CHECK(p.step(x, u)(0) == p.step(x, u)(0));
}

TEST_CASE("Plant: non-finite dynamics throw") {
    Plant p(
        1, 1, 1,
        [](const Vec&, const Vec&) { return v1(std::nan("")); },
        [](const Vec& x, const Vec&) { return x; });
    CHECK_THROWS_AS(p.step(v1(0), v1(0)), NonFiniteError);
}

TEST_CASE("steady_state: linear plant reaches x = u") {
    const Vec x = steady_state(lti_plant(), v1(3.0), 1e-12);
    CHECK(std::abs(x(0) - 3.0) < 1e-9);
}

TEST_CASE("steady_state: scalar plant matches the closed-form fixed point") {
    // x = 0.5 x + 0.25 + 0.1 sin(1)  =>  x = 0.5 + 0.2 sin(1).
    const Vec x = steady_state(scalar_plant(), v1(1.0), 1e-12);
    CHECK(x(0) == doctest::Approx(0.5 + 0.2 * std::sin(1.0)).epsilon(1e-9));
    CHECK(x(0) == doctest::Approx(0.66829).epsilon(1e-4));
}

TEST_CASE("steady_state: equilibrium at the origin is returned exactly") {
    const Vec x = steady_state(scalar_plant(), v1(0.0));
    CHECK(x(0) == 0.0);
}

TEST_CASE("steady_state: exhausting max_iter reports the last residual") {
    Plant slow(
        1, 1, 1,
        [](const Vec& x, const Vec& u) {
            return v1(0.999999 * x(0) + u(0));
        },
        [](const Vec& x, const Vec&) { return x; });
    try {
        steady_state(slow, v1(1.0), 1e-10, 10);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.last_residual() > 0.0);
        CHECK(std::isfinite(e.last_residual()));
    }
}

TEST_CASE("steady_state: residual contracts geometrically on benchmarks") {
    const Benchmark b = make_scalar_benchmark();
    const Vec u = v1(2.0);
    Vec x = Vec::Zero(1);
    double prev = -1.0;
    for (int k = 0; k < 40; ++k) {
        const Vec xn = b.plant.step(x, u);
        const double res = (xn - x).lpNorm<Eigen::Infinity>();
        if (prev > 1e-12) CHECK(res / prev <= 0.5 + 1e-6);
        prev = res;
        x = xn;
    }
}

TEST_CASE("linearize: linear plant gives its own coefficients") {
    const LinearizationResult lin = linearize(lti_plant(), v1(0.7), v1(1.9));
    CHECK(lin.A(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(lin.B(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(lin.C(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(lin.D(0, 0)) < 1e-7);
}

TEST_CASE("linearize: scalar plant at the origin") {
    const LinearizationResult lin =
        linearize(scalar_plant(), v1(0.0), v1(0.0));
    CHECK(lin.A(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(lin.B(0, 0) == doctest::Approx(0.35).epsilon(1e-7));  // 0.25 + 0.1
    CHECK(lin.C(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("linearize: analytic and finite-difference paths agree on the "
          "wind farm") {
    const FarmLayout layout = FarmLayout::aligned(2);
    const Plant farm = farm_plant(layout);
    const Plant fd = strip_jacobians(farm);
    Vec x(2), u(4);
    x << 7.3, 6.1;
    u << 1.7, 2.4, 11.0, -4.0;
    const LinearizationResult a = linearize(farm, x, u);
    const LinearizationResult b = linearize(fd, x, u);
    CHECK((a.A - b.A).norm() / std::max(1.0, a.A.norm()) < 1e-5);
    CHECK((a.B - b.B).norm() / std::max(1.0, a.B.norm()) < 1e-5);
    CHECK((a.C - b.C).norm() / std::max(1.0, a.C.norm()) < 1e-5);
    CHECK((a.D - b.D).norm() / std::max(1.0, a.D.norm()) < 1e-5);
}

TEST_CASE("linearize: result is independent of the hidden disturbances") {
    const Plant clean = scalar_plant();
    const Plant shifted = scalar_plant(v1(0.3), v1(-0.1));
    const Vec x = v1(0.8), u = v1(-1.1);
    const LinearizationResult a = linearize(clean, x, u);
    const LinearizationResult b = linearize(shifted, x, u);
    CHECK((a.A - b.A).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.B - b.B).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.C - b.C).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.D - b.D).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sensitivity: scalar closed forms") {
    LinearizationResult lin;
    lin.A = Mat::Constant(1, 1, 0.5);
    lin.B = Mat::Constant(1, 1, 0.5);
    lin.C = Mat::Constant(1, 1, 1.0);
    lin.D = Mat::Zero(1, 1);
    CHECK(sensitivity(lin)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    const Mat S = sensitivity(linearize(scalar_plant(), v1(0.0), v1(0.0)));
    // (1 - 0.5)^-1 * 0.35 = 0.7 = h'(0) = 0.5 + 0.2 cos(0).
    CHECK(S(0, 0) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("sensitivity: memoryless state recursion gives C*B + D") {
    LinearizationResult lin;
    lin.A = Mat::Zero(2, 2);
    lin.B = (Mat(2, 2) << 1, 0, 1, 1).finished();
    lin.C = (Mat(2, 2) << 1, 2, 0, 1).finished();
    lin.D = (Mat(2, 2) << 0.5, 0, 0, 0).finished();
    const Mat expect = lin.C * lin.B + lin.D;
    CHECK((sensitivity(lin) - expect).norm() < 1e-14);
}

TEST_CASE("sensitivity: singular I - A raises a singularity error") {
    LinearizationResult lin;
    lin.A = Mat::Identity(1, 1);
    lin.B = Mat::Constant(1, 1, 1.0);
    lin.C = Mat::Constant(1, 1, 1.0);
    lin.D = Mat::Zero(1, 1);
    CHECK_THROWS_AS(sensitivity(lin), SingularityError);
}

TEST_CASE("LTI plants have the same sensitivity at every point") {
    const Benchmark b = make_lti_benchmark();
    const Mat ref = sensitivity(linearize(b.plant, v1(0.0), v1(0.0)));
    for (double x : {-1.0, 0.3, 2.0})
        for (double u : {0.0, 1.0, 1.9}) {
            const Mat S = sensitivity(linearize(b.plant, v1(x), v1(u)));
            CHECK((S - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
}

TEST_CASE("exact_steady_jacobian: linear plant has unit gain") {
    const Mat S = exact_steady_jacobian(lti_plant(), v1(1.3));
    CHECK(S(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact_steady_jacobian: scalar plant matches the analytic h'") {
    const Mat S = exact_steady_jacobian(scalar_plant(), v1(1.0), 1e-12);
    CHECK(S(0, 0) ==
          doctest::Approx(0.5 + 0.2 * std::cos(1.0)).epsilon(1e-6));
    CHECK(S(0, 0) == doctest::Approx(0.60806).epsilon(1e-4));
}

TEST_CASE("exact_steady_jacobian matches finite differences of the "
          "composed steady-state map on the farm") {
    const FarmLayout layout = FarmLayout::aligned(2);
    const Plant farm = farm_plant(layout);
    Vec u(4);
    u << 2.0, 1.1, 8.0, -3.0;
    const Mat S = exact_steady_jacobian(farm, u, 1e-12);
    const Mat S_fd = finite_diff_jacobian(
        [&](const Vec& uu) {
            return farm.measure(steady_state(farm, uu, 1e-12), uu);
        },
        u);
    CHECK((S - S_fd).norm() / S.norm() < 1e-5);
}
