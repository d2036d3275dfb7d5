#include "seqfo/farm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace seqfo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double induction(double thrust) { return thrust / (4.0 + thrust); }
double d_induction(double thrust) {
    const double denom = 4.0 + thrust;
    return 4.0 / (denom * denom);
}

/// Power coefficient 4a(1-a)^2 cos^2(yaw).
double power_coeff(double a, double yaw_rad) {
    const double c = std::cos(yaw_rad);
    return 4.0 * a * (1.0 - a) * (1.0 - a) * c * c;
}

double rotor_kappa(const FarmLayout& L) {
    return 0.5 * L.air_density * std::numbers::pi * L.rotor_radius *
           L.rotor_radius;
}

/// Wake geometry between an upstream turbine i and a downstream one j.
struct WakeTerm {
    double deficit;      // d_ij
    double dd_da;        // partial of deficit wrt upstream induction
    double dd_dyaw_rad;  // partial of deficit wrt upstream yaw (radians)
};

WakeTerm wake_term(const FarmLayout& L, double a, double yaw_rad, double s,
                   double dy) {
    const double D = L.diameter();
    const double width = D + 2.0 * L.wake_expansion * s;
    const double r = D / width;
    const double sigma = 0.5 * width;
    const double off = L.deflection_gain * a * std::sin(yaw_rad) * s;
    const double delta = dy - off;
    const double E = std::exp(-delta * delta / (2.0 * sigma * sigma));
    const double r2E = r * r * E;

    WakeTerm t;
    t.deficit = 2.0 * a * r2E;
    const double s_over_sig2 = s / (sigma * sigma);
    t.dd_da =
        2.0 * r2E * (1.0 + a * delta * L.deflection_gain * std::sin(yaw_rad) *
                               s_over_sig2);
    t.dd_dyaw_rad = 2.0 * a * a * r2E * delta * L.deflection_gain *
                    std::cos(yaw_rad) * s_over_sig2;
    return t;
}

void check_ctrl_dims(const FarmLayout& L, const FarmControl& c) {
    if (c.thrust.size() != L.n_turbines() ||
        c.yaw_deg.size() != L.n_turbines())
        throw InvalidArgumentError(
            "farm control dimension does not match the layout");
}

}  // namespace

void FarmLayout::validate() const {
    if (positions.empty())
        throw InvalidArgumentError("FarmLayout: no turbines");
    if (!(rotor_radius > 0.0))
        throw InvalidArgumentError("FarmLayout: rotor_radius must be > 0");
    if (!(free_stream > 0.0))
        throw InvalidArgumentError("FarmLayout: free_stream must be > 0");
    if (!(air_density > 0.0))
        throw InvalidArgumentError("FarmLayout: air_density must be > 0");
    if (!(wake_expansion >= 0.0))
        throw InvalidArgumentError("FarmLayout: wake_expansion must be >= 0");
    if (!(relaxation > 0.0 && relaxation < 1.0))
        throw InvalidArgumentError("FarmLayout: relaxation must be in (0,1)");
    if (!(p_ref > 0.0))
        throw InvalidArgumentError("FarmLayout: p_ref must be > 0");
    if (!(mu >= 0.0) || !(mu_gamma >= 0.0))
        throw InvalidArgumentError("FarmLayout: regularization weights < 0");
    for (size_t i = 0; i + 1 < positions.size(); ++i)
        if (positions[i][0] > positions[i + 1][0])
            throw InvalidArgumentError(
                "FarmLayout: turbines must be sorted by downwind coordinate");
    for (size_t i = 0; i < positions.size(); ++i)
        for (size_t j = i + 1; j < positions.size(); ++j) {
            const double dx = positions[i][0] - positions[j][0];
            const double dy = positions[i][1] - positions[j][1];
            if (dx == 0.0 && dy == 0.0)
                throw InvalidArgumentError("FarmLayout: co-located turbines");
        }
}

FarmLayout FarmLayout::aligned(int n, double spacing_diameters) {
    if (n <= 0) throw InvalidArgumentError("FarmLayout::aligned: n <= 0");
    FarmLayout L;
    const double spacing = spacing_diameters * L.diameter();
    for (int i = 0; i < n; ++i)
        L.positions.push_back({i * spacing, 0.0});
    L.p_ref = 1e6 * n;
    L.validate();
    return L;
}

FarmLayout FarmLayout::from_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgumentError("FarmLayout: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw InvalidArgumentError("FarmLayout: bad JSON in " + path + ": " +
                                   e.what());
    }

    FarmLayout L;
    try {
        for (const auto& pos : j.at("positions"))
            L.positions.push_back(
                {pos.at(0).get<double>(), pos.at(1).get<double>()});
        L.rotor_radius = j.value("rotor_radius", L.rotor_radius);
        L.free_stream = j.value("free_stream", L.free_stream);
        L.air_density = j.value("air_density", L.air_density);
        L.wake_expansion = j.value("wake_expansion", L.wake_expansion);
        L.deflection_gain = j.value("deflection_gain", L.deflection_gain);
        L.relaxation = j.value("relaxation", L.relaxation);
        L.p_ref = j.value("p_ref", 1e6 * L.positions.size());
        L.mu = j.value("mu", L.mu);
        L.mu_gamma = j.value("mu_gamma", L.mu_gamma);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgumentError("FarmLayout: bad field in " + path + ": " +
                                   e.what());
    }
    L.validate();
    return L;
}

Vec FarmControl::flatten() const {
    Vec u(thrust.size() + yaw_deg.size());
    u.head(thrust.size()) = thrust;
    u.tail(yaw_deg.size()) = yaw_deg;
    return u;
}

FarmControl FarmControl::unflatten(const Vec& u) {
    if (u.size() % 2 != 0)
        throw InvalidArgumentError("FarmControl: flattened input must be 2N");
    const long n = u.size() / 2;
    FarmControl c;
    c.thrust = u.head(n);
    c.yaw_deg = u.tail(n);
    return c;
}

std::pair<Vec, Vec> farm_input_box(int n) {
    if (n <= 0) throw InvalidArgumentError("farm_input_box: n <= 0");
    Vec lo(2 * n), hi(2 * n);
    lo.head(n).setConstant(0.4);
    hi.head(n).setConstant(3.6);
    lo.tail(n).setConstant(-30.0);
    hi.tail(n).setConstant(30.0);
    return {lo, hi};
}

Vec park_steady_speeds(const FarmLayout& L, const FarmControl& c) {
    check_ctrl_dims(L, c);
    const int N = L.n_turbines();
    Vec v(N);
    for (int j = 0; j < N; ++j) {
        double q = 0.0;
        for (int i = 0; i < N; ++i) {
            const double s = L.positions[j][0] - L.positions[i][0];
            if (s <= 0.0) continue;
            const double dy = L.positions[j][1] - L.positions[i][1];
            const WakeTerm t = wake_term(L, induction(c.thrust(i)),
                                         c.yaw_deg(i) * kDegToRad, s, dy);
            q += t.deficit * t.deficit;
        }
        v(j) = L.free_stream * (1.0 - std::min(1.0, std::sqrt(q)));
    }
    return v;
}

Mat park_input_jacobian(const FarmLayout& L, const FarmControl& c) {
    check_ctrl_dims(L, c);
    const int N = L.n_turbines();
    Mat J = Mat::Zero(N, 2 * N);
    std::vector<WakeTerm> terms(N);
    for (int j = 0; j < N; ++j) {
        double q = 0.0;
        for (int i = 0; i < N; ++i) {
            terms[i].deficit = 0.0;
            const double s = L.positions[j][0] - L.positions[i][0];
            if (s <= 0.0) continue;
            const double dy = L.positions[j][1] - L.positions[i][1];
            terms[i] = wake_term(L, induction(c.thrust(i)),
                                 c.yaw_deg(i) * kDegToRad, s, dy);
            q += terms[i].deficit * terms[i].deficit;
        }
        if (q <= 0.0) continue;
        const double total = std::sqrt(q);
        if (total >= 1.0) continue;  // clamped at zero speed: flat
        for (int i = 0; i < N; ++i) {
            if (terms[i].deficit == 0.0) continue;
            const double dv_dd =
                -L.free_stream * terms[i].deficit / total;
            J(j, i) = dv_dd * terms[i].dd_da * d_induction(c.thrust(i));
            J(j, N + i) = dv_dd * terms[i].dd_dyaw_rad * kDegToRad;
        }
    }
    return J;
}

Plant farm_plant(const FarmLayout& layout, Vec w1, Vec w2) {
    layout.validate();
    const FarmLayout L = layout;
    const int N = L.n_turbines();
    const double tau = L.relaxation;
    const double kappa = rotor_kappa(L);

    auto dynamics = [L, tau](const Vec& x, const Vec& u) -> Vec {
        return (1.0 - tau) * x +
               tau * park_steady_speeds(L, FarmControl::unflatten(u));
    };
    auto measurement = [L, kappa](const Vec& x, const Vec& u) -> Vec {
        const FarmControl c = FarmControl::unflatten(u);
        Vec y(x.size());
        for (long i = 0; i < x.size(); ++i)
            y(i) = kappa *
                   power_coeff(induction(c.thrust(i)),
                               c.yaw_deg(i) * kDegToRad) *
                   x(i) * x(i) * x(i);
        return y;
    };

    AnalyticJacobians jac;
    jac.fx = [N, tau](const Vec&, const Vec&) -> Mat {
        return (1.0 - tau) * Mat::Identity(N, N);
    };
    jac.fu = [L, tau](const Vec&, const Vec& u) -> Mat {
        return tau * park_input_jacobian(L, FarmControl::unflatten(u));
    };
    jac.gx = [kappa](const Vec& x, const Vec& u) -> Mat {
        const FarmControl c = FarmControl::unflatten(u);
        Mat G = Mat::Zero(x.size(), x.size());
        for (long i = 0; i < x.size(); ++i)
            G(i, i) = 3.0 * kappa *
                      power_coeff(induction(c.thrust(i)),
                                  c.yaw_deg(i) * kDegToRad) *
                      x(i) * x(i);
        return G;
    };
    jac.gu = [kappa](const Vec& x, const Vec& u) -> Mat {
        const FarmControl c = FarmControl::unflatten(u);
        const long n = x.size();
        Mat G = Mat::Zero(n, 2 * n);
        for (long i = 0; i < n; ++i) {
            const double a = induction(c.thrust(i));
            const double g = c.yaw_deg(i) * kDegToRad;
            const double x3 = x(i) * x(i) * x(i);
            const double cg = std::cos(g);
            // d/da of 4a(1-a)^2 is 4(1-a)(1-3a).
            G(i, i) = kappa * x3 * cg * cg * 4.0 * (1.0 - a) *
                      (1.0 - 3.0 * a) * d_induction(c.thrust(i));
            G(i, n + i) = kappa * x3 * 4.0 * a * (1.0 - a) * (1.0 - a) *
                          (-std::sin(2.0 * g)) * kDegToRad;
        }
        return G;
    };

    return Plant(N, 2 * N, N, dynamics, measurement, std::move(w1),
                 std::move(w2), jac);
}

ProblemSpec farm_problem(const FarmLayout& layout, double alpha_thrust,
                         double alpha_yaw) {
    layout.validate();
    if (!(alpha_thrust > 0.0) || !(alpha_yaw > 0.0))
        throw InvalidArgumentError("farm_problem: step sizes must be > 0");
    const int N = layout.n_turbines();
    const double pref = layout.p_ref, mu = layout.mu,
                 mug = layout.mu_gamma;

    ProblemSpec prob;
    prob.cost = [pref, mu, mug](const Vec& u, const Vec& y) {
        const FarmControl c = FarmControl::unflatten(u);
        const double t = (y.sum() - pref) / pref;
        return t * t + mu * c.thrust.squaredNorm() +
               mug * c.yaw_deg.squaredNorm();
    };
    prob.grad_u = [mu, mug](const Vec& u, const Vec&) {
        const FarmControl c = FarmControl::unflatten(u);
        Vec g(u.size());
        g.head(c.thrust.size()) = 2.0 * mu * c.thrust;
        g.tail(c.yaw_deg.size()) = 2.0 * mug * c.yaw_deg;
        return g;
    };
    prob.grad_y = [pref](const Vec&, const Vec& y) {
        return Vec::Constant(y.size(),
                             2.0 * (y.sum() - pref) / (pref * pref));
    };
    auto box = farm_input_box(N);
    prob.lower = std::move(box.first);
    prob.upper = std::move(box.second);
    prob.step_sizes = Vec(2 * N);
    prob.step_sizes.head(N).setConstant(alpha_thrust);
    prob.step_sizes.tail(N).setConstant(alpha_yaw);
    return prob;
}

FarmControl greedy_baseline(const FarmLayout& layout) {
    layout.validate();
    FarmControl c;
    c.thrust = Vec::Constant(layout.n_turbines(), 2.0);
    c.yaw_deg = Vec::Zero(layout.n_turbines());
    return c;
}

double farm_steady_total_power(const FarmLayout& L, const FarmControl& c) {
    const Vec v = park_steady_speeds(L, c);
    const double kappa = rotor_kappa(L);
    double total = 0.0;
    for (long i = 0; i < v.size(); ++i)
        total += kappa *
                 power_coeff(induction(c.thrust(i)),
                             c.yaw_deg(i) * kDegToRad) *
                 v(i) * v(i) * v(i);
    return total;
}

double farm_steady_cost(const FarmLayout& L, const FarmControl& c) {
    const double t = (farm_steady_total_power(L, c) - L.p_ref) / L.p_ref;
    return t * t + L.mu * c.thrust.squaredNorm() +
           L.mu_gamma * c.yaw_deg.squaredNorm();
}

std::pair<FarmControl, double> grid_search_optimum(const FarmLayout& L,
                                                   int resolution) {
    L.validate();
    const int N = L.n_turbines();
    if (N > 2)
        throw InvalidArgumentError(
            "grid_search_optimum: exhaustive search is only feasible for "
            "N <= 2 turbines");
    if (resolution < 10)
        throw InvalidArgumentError("grid_search_optimum: resolution < 10");

    const double kappa = rotor_kappa(L);
    const double pref = L.p_ref, inv_pref = 1.0 / pref;
    const int R = resolution;
    auto grid_val = [R](double lo, double hi, int i) {
        return lo + (hi - lo) * i / (R - 1);
    };

    std::vector<double> cts(R), yws(R);
    for (int i = 0; i < R; ++i) {
        cts[i] = grid_val(0.4, 3.6, i);
        yws[i] = grid_val(-30.0, 30.0, i);
    }

    double best_cost = std::numeric_limits<double>::infinity();
    FarmControl best;

    if (N == 1) {
        const double v = L.free_stream;
        const double v3 = v * v * v;
        for (int i = 0; i < R; ++i) {
            const double a = induction(cts[i]);
            const double reg_ct = L.mu * cts[i] * cts[i];
            for (int j = 0; j < R; ++j) {
                const double p =
                    kappa * power_coeff(a, yws[j] * kDegToRad) * v3;
                const double t = (p - pref) * inv_pref;
                const double cost =
                    t * t + reg_ct + L.mu_gamma * yws[j] * yws[j];
                if (cost < best_cost) {
                    best_cost = cost;
                    best.thrust = Vec::Constant(1, cts[i]);
                    best.yaw_deg = Vec::Constant(1, yws[j]);
                }
            }
        }
    } else {
        // The upstream turbine's speed never depends on any control, and
        // the downstream speed depends only on the upstream control, so
        // the inner 2D sweep reuses hoisted quantities. Every grid point
        // is still evaluated exactly.
        std::vector<double> power2(static_cast<size_t>(R) * R),
            reg2(static_cast<size_t>(R) * R);
        FarmControl probe;
        probe.thrust = Vec::Constant(2, 2.0);
        probe.yaw_deg = Vec::Zero(2);
        for (int i1 = 0; i1 < R; ++i1) {
            probe.thrust(0) = cts[i1];
            const double reg_ct1 = L.mu * cts[i1] * cts[i1];
            const double a1 = induction(cts[i1]);
            for (int j1 = 0; j1 < R; ++j1) {
                probe.yaw_deg(0) = yws[j1];
                const Vec v = park_steady_speeds(L, probe);
                const double p1 =
                    kappa * power_coeff(a1, yws[j1] * kDegToRad) * v(0) *
                    v(0) * v(0);
                const double v2cube = v(1) * v(1) * v(1);
                if (i1 == 0 && j1 == 0) {
                    for (int i2 = 0; i2 < R; ++i2) {
                        const double a2 = induction(cts[i2]);
                        const double reg_ct2 = L.mu * cts[i2] * cts[i2];
                        for (int j2 = 0; j2 < R; ++j2) {
                            power2[static_cast<size_t>(i2) * R + j2] =
                                kappa * power_coeff(a2, yws[j2] * kDegToRad);
                            reg2[static_cast<size_t>(i2) * R + j2] =
                                reg_ct2 + L.mu_gamma * yws[j2] * yws[j2];
                        }
                    }
                }
                const double base = reg_ct1 + L.mu_gamma * yws[j1] * yws[j1];
                for (int i2 = 0; i2 < R; ++i2) {
                    for (int j2 = 0; j2 < R; ++j2) {
                        const size_t idx = static_cast<size_t>(i2) * R + j2;
                        const double p = p1 + power2[idx] * v2cube;
                        const double t = (p - pref) * inv_pref;
                        const double cost = t * t + base + reg2[idx];
                        if (cost < best_cost) {
                            best_cost = cost;
                            best.thrust =
                                (Vec(2) << cts[i1], cts[i2]).finished();
                            best.yaw_deg =
                                (Vec(2) << yws[j1], yws[j2]).finished();
                        }
                    }
                }
            }
        }
    }

    // Greedy is injected as an extra candidate so the search result is
    // never worse than the baseline, even off-grid.
    const FarmControl greedy = greedy_baseline(L);
    const double greedy_cost = farm_steady_cost(L, greedy);
    if (greedy_cost < best_cost) {
        best_cost = greedy_cost;
        best = greedy;
    }
    return {best, best_cost};
}

}  // namespace seqfo
