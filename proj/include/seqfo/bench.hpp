#pragma once

#include <optional>
#include <string>

#include "seqfo/certificates.hpp"
#include "seqfo/plant.hpp"
#include "seqfo/problem.hpp"

namespace seqfo {

/// A ready-to-run plant/problem pairing. `constants` carries hand-derived
/// regularity constants (exact suprema over the operating region) when
/// the benchmark ships them; `state_lo`/`state_hi` bound the reachable
/// states and double as the sampling box for estimate_constants.
struct Benchmark {
    std::string name;
    Plant plant;
    ProblemSpec problem;
    std::optional<RegularityConstants> constants;
    Vec state_lo, state_hi;
};

/// Linear benchmark: x+ = 0.5 x + 0.5 u, y = x, cost (u-2)^2 + (y-1)^2,
/// box u in [0, 2]. The steady-state map is h(u) = u and the optimum is
/// u* = 1.5 (interior). The point linearization is globally exact, so
/// every runner follows the exact-sensitivity trajectory.
Benchmark make_lti_benchmark(double alpha = 0.1, Vec w1 = Vec(),
                             Vec w2 = Vec());

/// Scalar nonlinear benchmark:
///   x+ = (5/3) sin(0.3 x) + 0.25 u + 0.1 sin(u),  y = x,
///   cost (u-2)^2 + 0.02 (y-1)^2, box u in [-5, 5].
/// Contraction factor 0.5; the state-dependent Jacobians make the
/// linearized sensitivity genuinely differ from the steady-state one
/// away from the fixed point. Hand constants are suprema over the box
/// and the reachable state interval |x| <= 5/3 + 0.25*5 + 0.1.
Benchmark make_scalar_benchmark(double alpha = 0.3, Vec w1 = Vec(),
                                Vec w2 = Vec());

}  // namespace seqfo
