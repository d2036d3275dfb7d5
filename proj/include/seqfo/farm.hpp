#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "seqfo/plant.hpp"
#include "seqfo/problem.hpp"

namespace seqfo {

/// Desk-scale wind-farm description: turbine positions plus the wake,
/// rotor and cost parameters. Positions are (downwind, crosswind) in
/// meters and must be sorted by downwind coordinate.
struct FarmLayout {
    std::vector<std::array<double, 2>> positions;
    double rotor_radius = 45.0;     ///< meters
    double free_stream = 8.0;       ///< m/s
    double air_density = 1.225;     ///< kg/m^3
    double wake_expansion = 0.05;   ///< dimensionless
    double deflection_gain = 2.5;   ///< wake-center offset per sin(yaw)
    double relaxation = 0.25;       ///< state relaxation rate, in (0,1)
    double p_ref = 1e6;             ///< power reference, watts
    double mu = 8e-4;               ///< thrust regularization weight
    double mu_gamma = 6e-5;         ///< yaw regularization weight

    int n_turbines() const { return static_cast<int>(positions.size()); }
    double diameter() const { return 2.0 * rotor_radius; }

    /// Throws InvalidArgumentError on any violated invariant.
    void validate() const;

    /// n turbines on one downwind line, spaced `spacing_diameters`
    /// rotor diameters apart, reference power 1 MW per turbine.
    static FarmLayout aligned(int n, double spacing_diameters = 5.0);

    /// Loads a layout from a JSON file whose keys match the field names.
    static FarmLayout from_json(const std::string& path);
};

/// Farm input: per-turbine thrust coefficients and yaw angles (degrees).
/// The flattened plant input is [thrust_0..thrust_{N-1}, yaw_0..yaw_{N-1}].
struct FarmControl {
    Vec thrust;
    Vec yaw_deg;

    Vec flatten() const;
    static FarmControl unflatten(const Vec& u);
};

/// Input box for an N-turbine farm: thrust in [0.4, 3.6], yaw in
/// [-30, 30] degrees.
std::pair<Vec, Vec> farm_input_box(int n_turbines);

/// Steady rotor-effective speeds of the reduced wake model: each
/// downstream turbine sees a root-sum-square superposition of Gaussian-
/// shaped top-hat deficits whose centers are deflected linearly in
/// distance by upstream yaw. This is the exact fixed point of the farm
/// plant's dynamics, available in closed form.
Vec park_steady_speeds(const FarmLayout& layout, const FarmControl& ctrl);

/// Jacobian of park_steady_speeds with respect to the flattened control
/// (yaw columns in degrees). N x 2N.
Mat park_input_jacobian(const FarmLayout& layout, const FarmControl& ctrl);

/// Plant with state = rotor speeds, input = flattened FarmControl,
/// outputs = per-turbine electrical power in watts:
///   x+ = (1 - tau) x + tau * park_steady_speeds(u),
///   y_i = 0.5 rho_air pi R^2 * C_P(a_i, yaw_i) * x_i^3,
/// with C_P(a, g) = 4a(1-a)^2 cos^2(g) and a = thrust/(4 + thrust).
/// Analytic Jacobians are attached.
Plant farm_plant(const FarmLayout& layout, Vec w1 = Vec(), Vec w2 = Vec());

/// Power-tracking cost ((sum y - p_ref)/p_ref)^2 + mu ||thrust||^2 +
/// mu_gamma ||yaw||^2 over the farm input box, with per-block step
/// sizes (alpha_thrust on thrust coordinates, alpha_yaw on yaw ones).
ProblemSpec farm_problem(const FarmLayout& layout, double alpha_thrust = 0.25,
                         double alpha_yaw = 3.0);

/// Per-turbine greedy setting: thrust 2 (Betz-optimal induction 1/3),
/// zero yaw.
FarmControl greedy_baseline(const FarmLayout& layout);

/// Steady total power (watts) under a control, via the closed-form
/// steady speeds.
double farm_steady_total_power(const FarmLayout& layout,
                               const FarmControl& ctrl);

/// Cost at the steady state induced by a control.
double farm_steady_cost(const FarmLayout& layout, const FarmControl& ctrl);

/// Exhaustive search of the steady-state cost over a uniform grid with
/// `resolution` points per axis (2N axes), with the greedy baseline
/// injected as an extra candidate. Only implemented for N <= 2 turbines;
/// larger farms throw InvalidArgumentError.
std::pair<FarmControl, double> grid_search_optimum(const FarmLayout& layout,
                                                   int resolution);

}  // namespace seqfo
