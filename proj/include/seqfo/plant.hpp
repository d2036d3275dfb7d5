#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "seqfo/errors.hpp"

namespace seqfo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Optional analytic derivative maps of a plant at a point (x, u).
/// All four must be supplied together; each returns the Jacobian of the
/// undisturbed dynamics f or measurement g with respect to x or u.
struct AnalyticJacobians {
    std::function<Mat(const Vec&, const Vec&)> fx;  ///< d f / d x
    std::function<Mat(const Vec&, const Vec&)> fu;  ///< d f / d u
    std::function<Mat(const Vec&, const Vec&)> gx;  ///< d g / d x
    std::function<Mat(const Vec&, const Vec&)> gu;  ///< d g / d u
};

/// Discrete-time plant x+ = f(x,u) + w1, y = g(x,u) + w2.
///
/// The constant disturbances w1, w2 model unknown offsets acting on the
/// real system. They are folded into step()/measure() and deliberately
/// have no accessor: algorithms must cope with them through feedback, the
/// same way they would on hardware.
class Plant {
public:
    using VectorField = std::function<Vec(const Vec&, const Vec&)>;

    Plant(int state_dim, int input_dim, int output_dim,
          VectorField dynamics, VectorField measurement,
          Vec w1 = Vec(), Vec w2 = Vec(),
          std::optional<AnalyticJacobians> jacobians = std::nullopt);

    int state_dim() const noexcept { return n_; }
    int input_dim() const noexcept { return p_; }
    int output_dim() const noexcept { return m_; }

    /// Advance one sample: f(x,u) + w1. Throws NonFiniteError on NaN/inf.
    Vec step(const Vec& x, const Vec& u) const;

    /// Read the sensors: g(x,u) + w2. Throws NonFiniteError on NaN/inf.
    Vec measure(const Vec& x, const Vec& u) const;

    const std::optional<AnalyticJacobians>& jacobians() const noexcept {
        return jacobians_;
    }

private:
    void check_dims(const Vec& x, const Vec& u, const char* where) const;

    int n_, p_, m_;
    VectorField f_, g_;
    Vec w1_, w2_;  // hidden constant disturbances, no accessor by design
    std::optional<AnalyticJacobians> jacobians_;
};

/// Central-difference Jacobian of fn at `point`. The step defaults to
/// 1e-6 * max(1, ||point||_inf) when h <= 0 is passed. Throws
/// NonFiniteError naming the offending coordinate if any evaluation is
/// non-finite.
Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& fn,
                         const Vec& point, double h = 0.0);

/// Fixed-point iteration x <- f(x,u)+w1 from x0 (zero vector when absent)
/// until ||x_next - x||_inf < tol. Throws NonConvergenceError with the
/// last residual if max_iter is exhausted.
Vec steady_state(const Plant& plant, const Vec& u, double tol = 1e-10,
                 long max_iter = 1000000,
                 std::optional<Vec> x0 = std::nullopt);

/// The four Jacobians of a plant at a point, analytic when available,
/// otherwise central finite differences.
struct LinearizationResult {
    Mat A;  ///< d f / d x
    Mat B;  ///< d f / d u
    Mat C;  ///< d g / d x
    Mat D;  ///< d g / d u
    Vec x;  ///< linearization point, state
    Vec u;  ///< linearization point, input
};

LinearizationResult linearize(const Plant& plant, const Vec& x, const Vec& u);

/// Steady-state input-to-output sensitivity C (I - A)^-1 B + D computed
/// from a linearization via a dense LU solve (never an explicit inverse).
/// Throws SingularityError when the condition estimate of (I - A)
/// exceeds 1e12.
Mat sensitivity(const LinearizationResult& lin);

/// Sensitivity of the composed steady-state map u -> g(x_ss(u), u):
/// solves for x_ss(u), linearizes there, and applies sensitivity().
Mat exact_steady_jacobian(const Plant& plant, const Vec& u,
                          double tol = 1e-10);

}  // namespace seqfo
