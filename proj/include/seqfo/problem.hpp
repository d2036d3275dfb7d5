#pragma once

#include <functional>

#include "seqfo/plant.hpp"

namespace seqfo {

/// Optimization problem posed on a plant's inputs and measured outputs:
/// minimize cost(u, y) over the box [lower, upper], with per-coordinate
/// gradient step sizes.
struct ProblemSpec {
    std::function<double(const Vec&, const Vec&)> cost;
    std::function<Vec(const Vec&, const Vec&)> grad_u;  ///< d cost / d u
    std::function<Vec(const Vec&, const Vec&)> grad_y;  ///< d cost / d y
    Vec lower;       ///< box lower bounds (size p)
    Vec upper;       ///< box upper bounds (size p)
    Vec step_sizes;  ///< per-coordinate gradient steps (size p, all > 0)

    /// Throws InvalidArgumentError on empty maps, mismatched sizes,
    /// lower > upper anywhere, or non-positive step sizes.
    void validate() const;

    /// Largest entry of step_sizes; the value certificates treat as the
    /// step size when per-coordinate scaling is in use (conservative).
    double max_step() const;
};

/// Euclidean projection of v onto the box [lower, upper].
Vec project_box(const Vec& v, const Vec& lower, const Vec& upper);

/// Gradient of the reduced cost u -> cost(u, y(u)) under the model
/// y = S u + const:   grad_u + S^T grad_y, evaluated at (u, y).
Vec composite_gradient(const Vec& u, const Vec& y, const Mat& S,
                       const ProblemSpec& prob);

/// Cross-checks grad_u / grad_y against central finite differences of
/// cost at `samples` points drawn uniformly from the interior of the
/// input box and the given output box. Returns the worst relative error.
double check_problem_gradients(const ProblemSpec& prob, const Vec& y_lower,
                               const Vec& y_upper, int samples,
                               unsigned seed);

}  // namespace seqfo
