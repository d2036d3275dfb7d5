#include "seqfo/problem.hpp"

#include <random>

namespace seqfo {

void ProblemSpec::validate() const {
    if (!cost || !grad_u || !grad_y)
        throw InvalidArgumentError(
            "ProblemSpec: cost, grad_u and grad_y must all be set");
    if (lower.size() == 0 || lower.size() != upper.size())
        throw InvalidArgumentError("ProblemSpec: box bounds missing or mismatched");
    if (step_sizes.size() != lower.size())
        throw InvalidArgumentError(
            "ProblemSpec: step_sizes must match the box dimension");
    for (long i = 0; i < lower.size(); ++i) {
        if (!(lower(i) <= upper(i)))
            throw InvalidArgumentError("ProblemSpec: lower > upper in coordinate " +
                                       std::to_string(i));
        if (!(step_sizes(i) > 0.0))
            throw InvalidArgumentError(
                "ProblemSpec: step size must be positive in coordinate " +
                std::to_string(i));
    }
}

double ProblemSpec::max_step() const {
    if (step_sizes.size() == 0)
        throw InvalidArgumentError("ProblemSpec: step_sizes not set");
    return step_sizes.maxCoeff();
}

Vec project_box(const Vec& v, const Vec& lower, const Vec& upper) {
    if (v.size() != lower.size() || v.size() != upper.size())
        throw InvalidArgumentError("project_box: dimension mismatch");
    return v.cwiseMax(lower).cwiseMin(upper);
}

Vec composite_gradient(const Vec& u, const Vec& y, const Mat& S,
                       const ProblemSpec& prob) {
    if (S.rows() != y.size() || S.cols() != u.size())
        throw InvalidArgumentError("composite_gradient: sensitivity shape mismatch");
    Vec gu = prob.grad_u(u, y);
    Vec gy = prob.grad_y(u, y);
    if (gu.size() != u.size() || gy.size() != y.size())
        throw InvalidArgumentError("composite_gradient: gradient size mismatch");
    Vec out = gu + S.transpose() * gy;
    if (!out.allFinite())
        throw NonFiniteError("composite_gradient: non-finite gradient");
    return out;
}

double check_problem_gradients(const ProblemSpec& prob, const Vec& y_lower,
                               const Vec& y_upper, int samples, unsigned seed) {
    prob.validate();
    if (y_lower.size() != y_upper.size() || y_lower.size() == 0)
        throw InvalidArgumentError("check_problem_gradients: bad output box");
    if (samples <= 0)
        throw InvalidArgumentError("check_problem_gradients: samples must be > 0");

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.05, 0.95);  // interior only
    const long p = prob.lower.size(), m = y_lower.size();

    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec u(p), y(m);
        for (long i = 0; i < p; ++i)
            u(i) = prob.lower(i) + unit(rng) * (prob.upper(i) - prob.lower(i));
        for (long i = 0; i < m; ++i)
            y(i) = y_lower(i) + unit(rng) * (y_upper(i) - y_lower(i));

        Vec gu = prob.grad_u(u, y);
        Vec gy = prob.grad_y(u, y);
        Mat fd_u = finite_diff_jacobian(
            [&](const Vec& uu) {
                return Vec::Constant(1, prob.cost(uu, y));
            },
            u);
        Mat fd_y = finite_diff_jacobian(
            [&](const Vec& yy) {
                return Vec::Constant(1, prob.cost(u, yy));
            },
            y);
        const double scale_u = std::max(1.0, gu.norm());
        const double scale_y = std::max(1.0, gy.norm());
        worst = std::max(worst, (fd_u.transpose() - gu).norm() / scale_u);
        worst = std::max(worst, (fd_y.transpose() - gy).norm() / scale_y);
    }
    return worst;
}

}  // namespace seqfo
