#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seqfo/algorithms.hpp"
#include "seqfo/bench.hpp"
#include "seqfo/certificates.hpp"
#include "seqfo/farm.hpp"

using namespace seqfo;

namespace {

Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

RunConfig basic_config(double u0, long steps) {
    RunConfig cfg;
    cfg.max_outer = steps;
    cfg.initial_input = v1(u0);
    cfg.initial_state = v1(0.0);
    return cfg;
}

/// Steady-state cost of the scalar benchmark at input u; used by the
/// grid-search oracle below.
double scalar_steady_cost(const Benchmark& b, double u, double* x_warm) {
    const Vec x = steady_state(b.plant, v1(u), 1e-12, 1000000,
                               v1(*x_warm));
    *x_warm = x(0);
    return b.problem.cost(v1(u), b.plant.measure(x, v1(u)));
}

/// Brute-force optimum of the scalar benchmark over its box at 1e-4
/// resolution.
double scalar_grid_optimum(const Benchmark& b) {
    double best_u = -5.0, best_cost = 1e300, x_warm = 0.0;
    for (long i = 0; i <= 100000; ++i) {
        const double u = -5.0 + 1e-4 * i;
        const double c = scalar_steady_cost(b, u, &x_warm);
        if (c < best_cost) {
            best_cost = c;
            best_u = u;
        }
    }
    return best_u;
}

double max_u_deviation(const TrajectoryLog& a, const TrajectoryLog& b) {
    REQUIRE(a.records.size() == b.records.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.records.size(); ++i)
        worst = std::max(worst,
                         (a.records[i].u - b.records[i].u).norm());
    return worst;
}

}  // namespace

TEST_CASE("run_ideal_fo: linear benchmark converges to the interior "
          "optimum 1.5") {
    const Benchmark b = make_lti_benchmark(0.1);
    const TrajectoryLog log =
        run_ideal_fo(b.plant, b.problem, basic_config(0.0, 1000));
    CHECK(std::abs(log.final_input(0) - 1.5) <= 1e-6);
}

TEST_CASE("run_ideal_fo: starting at the optimum stays there") {
    const Benchmark b = make_lti_benchmark(0.1);
    RunConfig cfg = basic_config(1.5, 200);
    cfg.initial_state = Vec();  // start at the steady state for u = 1.5
    const TrajectoryLog log = run_ideal_fo(b.plant, b.problem, cfg);
    for (const auto& rec : log.records)
        CHECK(std::abs(rec.u(0) - 1.5) < 1e-9);
}

TEST_CASE("run_ideal_fo and run_sfo on the scalar benchmark reach the "
          "grid-search optimum") {
    const Benchmark b = make_scalar_benchmark(0.3);
    const double u_star = scalar_grid_optimum(b);
    CHECK(u_star == doctest::Approx(1.9988).epsilon(2e-4));

    const TrajectoryLog ideal =
        run_ideal_fo(b.plant, b.problem, basic_config(0.0, 5000));
    CHECK(std::abs(ideal.final_input(0) - u_star) < 1e-3);

    const TrajectoryLog sfo =
        run_sfo(b.plant, b.problem, basic_config(0.0, 20000));
    // The per-step linearization loop settles into a neighborhood of the
    // optimum whose radius is within the certified asymptotic bound.
    const Certificate cert =
        build_certificate(*b.constants, b.problem.max_step(), 1);
    REQUIRE(cert.certified);
    double tail_dev = 0.0;
    for (size_t i = sfo.records.size() - sfo.records.size() / 10;
         i < sfo.records.size(); ++i)
        tail_dev = std::max(tail_dev,
                            std::abs(sfo.records[i].u(0) - u_star));
    CHECK(tail_dev <= *cert.sfo_error_bound);
    CHECK(std::abs(sfo.final_input(0) - u_star) < 1e-2);
}

TEST_CASE("monotone neighborhood entry: the error pair enters the "
          "certified ball and stays") {
    const Benchmark b = make_scalar_benchmark(0.3);
    const double u_star = scalar_grid_optimum(b);
    double x_warm = 0.0;
    const Vec x_star = steady_state(b.plant, v1(u_star), 1e-12, 1000000,
                                    v1(x_warm));
    const double y_star = b.plant.measure(x_star, v1(u_star))(0);
    const Certificate cert =
        build_certificate(*b.constants, b.problem.max_step(), 1);
    REQUIRE(cert.certified);
    const double radius = *cert.sfo_error_bound * 1.1;

    const TrajectoryLog log =
        run_sfo(b.plant, b.problem, basic_config(-5.0, 20000));
    long entered_at = -1;
    for (size_t k = 0; k < log.records.size(); ++k) {
        const double err = std::hypot(log.records[k].u(0) - u_star,
                                      log.records[k].y(0) - y_star);
        if (entered_at < 0) {
            if (err <= radius) entered_at = static_cast<long>(k);
        } else {
            CHECK(err <= radius);
        }
    }
    CHECK(entered_at >= 0);
}

TEST_CASE("linear plants: sequential linearization equals the exact-"
          "sensitivity reference at every step") {
    const Benchmark b = make_lti_benchmark(0.1);
    const RunConfig cfg = basic_config(0.0, 500);
    const TrajectoryLog ideal = run_ideal_fo(b.plant, b.problem, cfg);
    const TrajectoryLog sfo = run_sfo(b.plant, b.problem, cfg);
    const TrajectoryLog smtfo1 = run_smtfo(b.plant, b.problem, cfg);
    CHECK(max_u_deviation(ideal, sfo) <= 1e-10);
    CHECK(max_u_deviation(ideal, smtfo1) <= 1e-10);
}

TEST_CASE("run_sfo: rejects inner_T != 1") {
    const Benchmark b = make_scalar_benchmark();
    RunConfig cfg = basic_config(0.0, 10);
    cfg.inner_T = 4;
    CHECK_THROWS_AS(run_sfo(b.plant, b.problem, cfg), InvalidArgumentError);
}

TEST_CASE("run_sfo: initial input outside the box is rejected") {
    const Benchmark b = make_scalar_benchmark();
    CHECK_THROWS_AS(run_sfo(b.plant, b.problem, basic_config(7.0, 10)),
                    InvalidArgumentError);
}

TEST_CASE("run_sfo: singular linearization names the outer iteration") {
    // Analytic df/dx = 1 exactly, so I - A is singular at every point.
    AnalyticJacobians jac;
    jac.fx = [](const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    jac.fu = [](const Vec&, const Vec&) {
        return Mat::Constant(1, 1, 0.1);
    };
    jac.gx = [](const Vec&, const Vec&) { return Mat::Identity(1, 1); };
    jac.gu = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
    Plant p(
        1, 1, 1,
        [](const Vec& x, const Vec& u) { return v1(x(0) + 0.1 * u(0)); },
        [](const Vec& x, const Vec&) { return x; }, Vec(), Vec(), jac);
    ProblemSpec prob = make_lti_benchmark().problem;
    RunConfig cfg = basic_config(0.0, 10);
    cfg.initial_state = v1(1.0);
    try {
        run_sfo(p, prob, cfg);
        FAIL("expected SingularityError");
    } catch (const SingularityError& e) {
        CHECK(std::string(e.what()).find("outer iteration 0") !=
              std::string::npos);
    }
}

TEST_CASE("halving the step size cuts the normalized tracking error by "
          "about four") {
    // Deviation from the exact-sensitivity reference, scaled by
    // (1 - rho_M) to remove the amplification the certificate assigns to
    // each step size; what remains follows the alpha^2 law.
    double normalized[2];
    const double alphas[2] = {0.4, 0.2};
    for (int i = 0; i < 2; ++i) {
        const Benchmark b = make_scalar_benchmark(alphas[i]);
        const RunConfig cfg = basic_config(0.0, 20000);
        const TrajectoryLog sfo = run_sfo(b.plant, b.problem, cfg);
        const TrajectoryLog ideal = run_ideal_fo(b.plant, b.problem, cfg);
        const Certificate cert =
            build_certificate(*b.constants, alphas[i], 1);
        REQUIRE(cert.certified);
        normalized[i] =
            max_u_deviation(sfo, ideal) * (1.0 - cert.rho_M);
    }
    const double ratio = normalized[0] / normalized[1];
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
}

TEST_CASE("run_smtfo: T=1 reproduces run_sfo bit for bit") {
    const Benchmark b = make_scalar_benchmark();
    const RunConfig cfg = basic_config(0.0, 500);
    const TrajectoryLog a = run_sfo(b.plant, b.problem, cfg);
    const TrajectoryLog t1 = run_smtfo(b.plant, b.problem, cfg);
    REQUIRE(a.records.size() == t1.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].u == t1.records[i].u);
        CHECK(a.records[i].y == t1.records[i].y);
        CHECK(a.records[i].cost == t1.records[i].cost);
    }
}

TEST_CASE("run_smtfo: counter accounting at T=80") {
    const Benchmark b = make_scalar_benchmark(0.05);
    RunConfig cfg = basic_config(0.0, 1122);
    cfg.inner_T = 80;
    const TrajectoryLog log = run_smtfo(b.plant, b.problem, cfg);
    CHECK(log.n_linearizations == 1122);
    CHECK(log.n_forward_steps == 89760);  // 80 * 1122
    CHECK(log.n_gradient_steps == 89760);
    CHECK(log.completed_outer == 1122);
    CHECK(log.records.size() == 89760);
}

TEST_CASE("run_smtfo: longer inner loops trade accuracy for fewer "
          "linearizations") {
    // Fixed budget of 2000 plant steps; deviation from the exact-
    // sensitivity reference must not decrease with T and must respect
    // the certified frozen-sensitivity bound.
    const Benchmark b = make_scalar_benchmark(0.05);
    const long total = 2000;
    double prev_dev = -1.0;
    for (int T : {1, 5, 10, 20}) {
        RunConfig cfg = basic_config(0.0, total / T);
        cfg.inner_T = T;
        const TrajectoryLog log = run_smtfo(b.plant, b.problem, cfg);
        CHECK(log.n_forward_steps == total);
        CHECK(log.n_linearizations == total / T);

        RunConfig ref_cfg = basic_config(0.0, total);
        const TrajectoryLog ideal =
            run_ideal_fo(b.plant, b.problem, ref_cfg);
        const double dev = max_u_deviation(log, ideal);
        const Certificate cert = build_certificate(*b.constants, 0.05, T);
        REQUIRE(cert.certified);
        CHECK(dev <= *cert.smtfo_error_bound);
        CHECK(dev >= prev_dev);
        prev_dev = dev;
    }
}

TEST_CASE("every emitted input stays inside the box") {
    const FarmLayout layout = FarmLayout::aligned(2);
    const Plant plant = farm_plant(layout);
    const ProblemSpec prob = farm_problem(layout);
    RunConfig cfg;
    cfg.max_outer = 200;
    Vec u0(4);
    u0 << 2.0, 2.0, 5.0, 0.0;
    cfg.initial_input = u0;
    const TrajectoryLog log = run_sfo(plant, prob, cfg);
    for (const auto& rec : log.records) {
        const Vec clamped = project_box(rec.u, prob.lower, prob.upper);
        CHECK((rec.u - clamped).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("identical configurations give bit-identical runs") {
    const Benchmark b = make_scalar_benchmark();
    const RunConfig cfg = basic_config(0.0, 1000);
    const TrajectoryLog a = run_sfo(b.plant, b.problem, cfg);
    const TrajectoryLog c = run_sfo(b.plant, b.problem, cfg);
    REQUIRE(a.records.size() == c.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].u == c.records[i].u);
        CHECK(a.records[i].y == c.records[i].y);
        CHECK(a.records[i].cost == c.records[i].cost);
    }
}

TEST_CASE("counters: one plant step per gradient step on every runner") {
    const Benchmark b = make_scalar_benchmark();
    const RunConfig cfg = basic_config(0.0, 50);
    for (const TrajectoryLog& log :
         {run_ideal_fo(b.plant, b.problem, cfg),
          run_sfo(b.plant, b.problem, cfg)}) {
        CHECK(log.n_forward_steps == log.n_gradient_steps);
        CHECK(log.records.back().n_fwd == log.n_forward_steps);
    }
}

TEST_CASE("early stop halts on small input movement") {
    const Benchmark b = make_lti_benchmark(0.1);
    RunConfig cfg = basic_config(0.0, 100000);
    cfg.stop_tol = 1e-9;
    const TrajectoryLog log = run_ideal_fo(b.plant, b.problem, cfg);
    CHECK(log.completed_outer < 100000);
    CHECK(std::abs(log.final_input(0) - 1.5) < 1e-6);
}
