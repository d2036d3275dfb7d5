#include "seqfo/bench.hpp"

#include <cmath>

namespace seqfo {

Benchmark make_lti_benchmark(double alpha, Vec w1, Vec w2) {
    AnalyticJacobians jac;
    jac.fx = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.5); };
    jac.fu = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.5); };
    jac.gx = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
    jac.gu = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.0); };

    Plant plant(
        1, 1, 1,
        [](const Vec& x, const Vec& u) {
            return Vec::Constant(1, 0.5 * x(0) + 0.5 * u(0));
        },
        [](const Vec& x, const Vec&) { return Vec::Constant(1, x(0)); },
        std::move(w1), std::move(w2), jac);

    ProblemSpec prob;
    prob.cost = [](const Vec& u, const Vec& y) {
        const double a = u(0) - 2.0, b = y(0) - 1.0;
        return a * a + b * b;
    };
    prob.grad_u = [](const Vec& u, const Vec&) {
        return Vec::Constant(1, 2.0 * (u(0) - 2.0));
    };
    prob.grad_y = [](const Vec&, const Vec& y) {
        return Vec::Constant(1, 2.0 * (y(0) - 1.0));
    };
    prob.lower = Vec::Constant(1, 0.0);
    prob.upper = Vec::Constant(1, 2.0);
    prob.step_sizes = Vec::Constant(1, alpha);

    // Exact suprema over the box and the reachable states [0, 2]:
    // h(u) = u, grad_u cost = 2(u-2), grad_y cost = 2(y-1).
    RegularityConstants c;
    c.rho_f = 0.5;
    c.G_u_f = 0.5;
    c.L_f_x = 0.0;
    c.L_f_u = 0.0;
    c.L_h = 1.0;
    c.mu_J = 2.0;
    c.L_J_u = 2.0;
    c.L_J_y = 2.0;
    c.G_u_J = 4.0;
    c.G_y_J = 2.0;

    Benchmark b{"lti", std::move(plant), std::move(prob), c,
                Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)};
    return b;
}

Benchmark make_scalar_benchmark(double alpha, Vec w1, Vec w2) {
    AnalyticJacobians jac;
    jac.fx = [](const Vec& x, const Vec&) {
        return Mat::Constant(1, 1, 0.5 * std::cos(0.3 * x(0)));
    };
    jac.fu = [](const Vec&, const Vec& u) {
        return Mat::Constant(1, 1, 0.25 + 0.1 * std::cos(u(0)));
    };
    jac.gx = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
    jac.gu = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.0); };

    Plant plant(
        1, 1, 1,
        [](const Vec& x, const Vec& u) {
            return Vec::Constant(1, (5.0 / 3.0) * std::sin(0.3 * x(0)) +
                                        0.25 * u(0) + 0.1 * std::sin(u(0)));
        },
        [](const Vec& x, const Vec&) { return Vec::Constant(1, x(0)); },
        std::move(w1), std::move(w2), jac);

    ProblemSpec prob;
    prob.cost = [](const Vec& u, const Vec& y) {
        const double a = u(0) - 2.0, b = y(0) - 1.0;
        return a * a + 0.02 * b * b;
    };
    prob.grad_u = [](const Vec& u, const Vec&) {
        return Vec::Constant(1, 2.0 * (u(0) - 2.0));
    };
    prob.grad_y = [](const Vec&, const Vec& y) {
        return Vec::Constant(1, 0.04 * (y(0) - 1.0));
    };
    prob.lower = Vec::Constant(1, -5.0);
    prob.upper = Vec::Constant(1, 5.0);
    prob.step_sizes = Vec::Constant(1, alpha);

    // Hand-derived suprema. Reachable states satisfy
    // |x| <= 5/3 + 0.25*5 + 0.1 = 3.0167, so |y - 1| <= 4.0167 and
    // sup ||grad_y cost|| = 0.04 * 4.0167 <= 0.1608. The steady map has
    // |h'(u)| = |0.25 + 0.1 cos u| / (1 - 0.5 cos(0.3 x)) <= 0.35/0.5.
    RegularityConstants c;
    c.rho_f = 0.5;    // sup |0.5 cos(0.3x)|
    c.G_u_f = 0.35;   // sup |0.25 + 0.1 cos u|
    c.L_f_x = 0.15;   // sup |d/dx 0.5 cos(0.3x)|
    c.L_f_u = 0.1;    // sup |d/du (0.25 + 0.1 cos u)|
    c.L_h = 0.7;
    c.mu_J = 2.0;
    c.L_J_u = 2.0;
    c.L_J_y = 0.04;
    c.G_u_J = 14.0;   // sup |2(u-2)| over [-5, 5]
    c.G_y_J = 0.1608;

    Benchmark b{"scalar",
                std::move(plant),
                std::move(prob),
                c,
                Vec::Constant(1, -3.02),
                Vec::Constant(1, 3.02)};
    return b;
}

}  // namespace seqfo
