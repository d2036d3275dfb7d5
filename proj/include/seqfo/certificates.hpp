#pragma once

#include <optional>
#include <string>

#include "seqfo/plant.hpp"
#include "seqfo/problem.hpp"

namespace seqfo {

/// Regularity constants describing a plant/cost pairing on its operating
/// region. Field names follow the mathematical symbols used throughout
/// the implementation notes:
///   rho_f   contraction factor of x -> f(x,u)            (in [0,1))
///   G_u_f   bound on ||d f / d u||
///   L_f_x   Lipschitz constant of (x,u) -> d f / d x
///   L_f_u   Lipschitz constant of (x,u) -> d f / d u
///   L_h     Lipschitz constant of the steady-state map u -> y_ss(u)
///   mu_J    strong-monotonicity constant of u -> grad_u cost   (> 0)
///   L_J_u   Lipschitz constant of grad_u cost                  (>= mu_J)
///   L_J_y   Lipschitz constant of grad_y cost
///   G_u_J   bound on ||grad_u cost||
///   G_y_J   bound on ||grad_y cost||
struct RegularityConstants {
    double rho_f = 0.0;
    double G_u_f = 0.0;
    double L_f_x = 0.0;
    double L_f_u = 0.0;
    double L_h = 0.0;
    double mu_J = 0.0;
    double L_J_u = 0.0;
    double L_J_y = 0.0;
    double G_u_J = 0.0;
    double G_y_J = 0.0;

    /// Throws AssumptionViolationError on any out-of-range field.
    void validate() const;
};

/// Lipschitz constant of the point-linearized sensitivity map,
///   ((1 - rho_f) L_f_u + G_u_f L_f_x) / (1 - rho_f)^2.
/// Zero exactly for linear plants (L_f_x = L_f_u = 0).
double lipschitz_sensitivity_constant(const RegularityConstants& c);

/// Convergence certificate for the feedback-optimization loops at a given
/// step size alpha and inner-loop length T. `certified` holds when the
/// contraction matrix M has spectral radius < 1, or when C == 0 (linear
/// plant: the linearized sensitivity is globally exact, so the tracking
/// error is identically zero regardless of rho_M). The error bounds are
/// populated only when certified.
struct Certificate {
    RegularityConstants constants;
    double alpha = 0.0;
    int T = 1;

    double sensitivity_lipschitz = 0.0;  ///< lipschitz_sensitivity_constant
    double C = 0.0;   ///< sensitivity_lipschitz * (1 + L_h)
    double C1 = 0.0;  ///< L_h*L_J_y + G_y_J*C
    double C2 = 0.0;  ///< L_J_u + L_h*L_J_y
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    double rho_M = 0.0;
    bool certified = false;

    /// Asymptotic input-tracking error bound for the per-step
    /// re-linearization loop (run_sfo).
    std::optional<double> sfo_error_bound;
    /// Same bound for the frozen-sensitivity loop (run_smtfo) at this T;
    /// affine in T: sfo_error_bound + (T-1) * smtfo_error_slope.
    std::optional<double> smtfo_error_bound;
    std::optional<double> smtfo_error_slope;

    /// Flat "key = value" text block (one pair per line) for reports.
    std::string to_kv_block() const;
};

/// Builds the certificate: M = [[sqrt(1 - 2*a*mu_J + a^2*L_J_u^2) + a*C1,
/// a*C2], [G_u_f, rho_f]], rho_M its spectral radius, and the error
/// bounds when certified. Throws CertificateError-style
/// AssumptionViolationError when the radicand is negative (cannot happen
/// for validated constants with alpha*L_J_u <= 1 but checked anyway).
Certificate build_certificate(const RegularityConstants& c, double alpha,
                              int T);

/// Spectral radius of a real 2x2 matrix by the closed-form eigenvalues;
/// complex pairs fall back to sqrt(det).
double spectral_radius_2x2(const Eigen::Matrix2d& M);

/// Largest step size alpha on a logarithmic grid of `grid` points in
/// [1e-8, 1] with rho(M(alpha)) <= target, refined by 40 bisection steps
/// against the next-larger grid point. Returns nullopt when no grid
/// point qualifies.
std::optional<double> design_stepsize(const RegularityConstants& c,
                                      double target, int grid = 400);

/// Bound on the output tracking error ||y_ss(u_k) - y_k|| along a run:
///   rho_f^k * e0 + alpha * L_h * (G_u_J + L_h * G_y_J) / (1 - rho_f),
/// where e0 is the initial output error.
double output_tracking_error_bound(const RegularityConstants& c, double alpha,
                                   long k, double e0);

/// Estimates RegularityConstants by quasi-random sampling of `samples`
/// points from the joint box [state_lo, state_hi] x [prob.lower,
/// prob.upper]: max Jacobian spectral norms for rho_f / G_u_f, max
/// difference quotients for the Lipschitz constants, max gradient norms
/// for G_u_J / G_y_J. Sup-type estimates are inflated by 10%; mu_J (a
/// min-type estimate) is deflated by 10%. Throws
/// AssumptionViolationError when the inflated rho_f estimate reaches 1
/// or the mu_J estimate is not positive.
RegularityConstants estimate_constants(const Plant& plant,
                                       const ProblemSpec& prob,
                                       const Vec& state_lo,
                                       const Vec& state_hi, int samples,
                                       unsigned seed);

}  // namespace seqfo
