#include "seqfo/plant.hpp"

#include <cmath>
#include <sstream>

namespace seqfo {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

std::string dim_msg(const char* what, long got, long want) {
    std::ostringstream os;
    os << what << ": got dimension " << got << ", expected " << want;
    return os.str();
}

}  // namespace

Plant::Plant(int state_dim, int input_dim, int output_dim,
             VectorField dynamics, VectorField measurement, Vec w1, Vec w2,
             std::optional<AnalyticJacobians> jacobians)
    : n_(state_dim),
      p_(input_dim),
      m_(output_dim),
      f_(std::move(dynamics)),
      g_(std::move(measurement)),
      w1_(std::move(w1)),
      w2_(std::move(w2)),
      jacobians_(std::move(jacobians)) {
    if (n_ <= 0 || p_ <= 0 || m_ <= 0)
        throw InvalidArgumentError("plant dimensions must be positive");
    if (!f_ || !g_)
        throw InvalidArgumentError("plant needs both dynamics and measurement maps");
    if (w1_.size() == 0) w1_ = Vec::Zero(n_);
    if (w2_.size() == 0) w2_ = Vec::Zero(m_);
    if (w1_.size() != n_)
        throw InvalidArgumentError(dim_msg("state disturbance", w1_.size(), n_));
    if (w2_.size() != m_)
        throw InvalidArgumentError(dim_msg("output disturbance", w2_.size(), m_));
    if (jacobians_) {
        const auto& j = *jacobians_;
        if (!j.fx || !j.fu || !j.gx || !j.gu)
            throw InvalidArgumentError(
                "analytic jacobians must supply all four maps or none");
    }
}

void Plant::check_dims(const Vec& x, const Vec& u, const char* where) const {
    if (x.size() != n_)
        throw InvalidArgumentError(dim_msg(where, x.size(), n_) + " (state)");
    if (u.size() != p_)
        throw InvalidArgumentError(dim_msg(where, u.size(), p_) + " (input)");
}

Vec Plant::step(const Vec& x, const Vec& u) const {
    check_dims(x, u, "Plant::step");
    Vec out = f_(x, u);
    if (out.size() != n_)
        throw InvalidArgumentError(dim_msg("dynamics map output", out.size(), n_));
    out += w1_;
    if (!all_finite(out))
        throw NonFiniteError("Plant::step produced a non-finite state");
    return out;
}

Vec Plant::measure(const Vec& x, const Vec& u) const {
    check_dims(x, u, "Plant::measure");
    Vec out = g_(x, u);
    if (out.size() != m_)
        throw InvalidArgumentError(dim_msg("measurement map output", out.size(), m_));
    out += w2_;
    if (!all_finite(out))
        throw NonFiniteError("Plant::measure produced a non-finite output");
    return out;
}

Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& fn,
                         const Vec& point, double h) {
    if (!fn) throw InvalidArgumentError("finite_diff_jacobian: empty function");
    if (point.size() == 0)
        throw InvalidArgumentError("finite_diff_jacobian: empty point");
    if (h <= 0.0)
        h = 1e-6 * std::max(1.0, point.lpNorm<Eigen::Infinity>());

    const long p = point.size();
    Vec probe = point;
    Mat jac;
    for (long j = 0; j < p; ++j) {
        probe(j) = point(j) + h;
        Vec hi = fn(probe);
        probe(j) = point(j) - h;
        Vec lo = fn(probe);
        probe(j) = point(j);
        if (hi.size() != lo.size())
            throw InvalidArgumentError(
                "finite_diff_jacobian: function output dimension changed");
        if (jac.size() == 0) jac.resize(hi.size(), p);
        if (hi.size() != jac.rows())
            throw InvalidArgumentError(
                "finite_diff_jacobian: function output dimension changed");
        Vec col = (hi - lo) / (2.0 * h);
        if (!all_finite(col)) {
            std::ostringstream os;
            os << "finite_diff_jacobian: non-finite derivative in coordinate "
               << j;
            throw NonFiniteError(os.str());
        }
        jac.col(j) = col;
    }
    return jac;
}

Vec steady_state(const Plant& plant, const Vec& u, double tol, long max_iter,
                 std::optional<Vec> x0) {
    if (u.size() != plant.input_dim())
        throw InvalidArgumentError(
            dim_msg("steady_state input", u.size(), plant.input_dim()));
    if (tol <= 0.0) throw InvalidArgumentError("steady_state: tol must be > 0");
    if (max_iter <= 0)
        throw InvalidArgumentError("steady_state: max_iter must be > 0");

    Vec x = x0 ? *x0 : Vec::Zero(plant.state_dim());
    if (x.size() != plant.state_dim())
        throw InvalidArgumentError(
            dim_msg("steady_state initial state", x.size(), plant.state_dim()));

    double residual = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iter; ++it) {
        Vec next = plant.step(x, u);
        residual = (next - x).lpNorm<Eigen::Infinity>();
        x = std::move(next);
        if (residual < tol) return x;
    }
    std::ostringstream os;
    os << "steady_state: no fixed point within " << max_iter
       << " iterations (last residual " << residual << ")";
    throw NonConvergenceError(os.str(), residual);
}

LinearizationResult linearize(const Plant& plant, const Vec& x, const Vec& u) {
    if (x.size() != plant.state_dim() || u.size() != plant.input_dim())
        throw InvalidArgumentError("linearize: point has wrong dimensions");

    LinearizationResult lin;
    lin.x = x;
    lin.u = u;
    if (plant.jacobians()) {
        const auto& j = *plant.jacobians();
        lin.A = j.fx(x, u);
        lin.B = j.fu(x, u);
        lin.C = j.gx(x, u);
        lin.D = j.gu(x, u);
    } else {
        // The disturbances are additive constants, so differencing
        // step()/measure() gives the Jacobians of f and g themselves.
        lin.A = finite_diff_jacobian(
            [&](const Vec& xx) { return plant.step(xx, u); }, x);
        lin.B = finite_diff_jacobian(
            [&](const Vec& uu) { return plant.step(x, uu); }, u);
        lin.C = finite_diff_jacobian(
            [&](const Vec& xx) { return plant.measure(xx, u); }, x);
        lin.D = finite_diff_jacobian(
            [&](const Vec& uu) { return plant.measure(x, uu); }, u);
    }

    const long n = plant.state_dim(), p = plant.input_dim(),
               m = plant.output_dim();
    if (lin.A.rows() != n || lin.A.cols() != n || lin.B.rows() != n ||
        lin.B.cols() != p || lin.C.rows() != m || lin.C.cols() != n ||
        lin.D.rows() != m || lin.D.cols() != p)
        throw InvalidArgumentError("linearize: jacobian dimensions inconsistent");
    if (!lin.A.allFinite() || !lin.B.allFinite() || !lin.C.allFinite() ||
        !lin.D.allFinite())
        throw NonFiniteError("linearize: non-finite jacobian entry");
    return lin;
}

Mat sensitivity(const LinearizationResult& lin) {
    const long n = lin.A.rows();
    Mat ImA = Mat::Identity(n, n) - lin.A;
    Eigen::PartialPivLU<Mat> lu(ImA);
    const double rc = lu.rcond();
    if (!(rc > 1e-12)) {
        const double cond =
            rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        std::ostringstream os;
        os << "sensitivity: I - A is numerically singular (condition estimate "
           << cond << ")";
        throw SingularityError(os.str(), cond);
    }
    Mat Z = lu.solve(lin.B);
    return lin.C * Z + lin.D;
}

Mat exact_steady_jacobian(const Plant& plant, const Vec& u, double tol) {
    Vec xss = steady_state(plant, u, tol);
    return sensitivity(linearize(plant, xss, u));
}

}  // namespace seqfo
