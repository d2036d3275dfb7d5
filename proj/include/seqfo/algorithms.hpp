#pragma once

#include <string>
#include <vector>

#include "seqfo/plant.hpp"
#include "seqfo/problem.hpp"

namespace seqfo {

/// Configuration shared by all feedback-optimization runners.
struct RunConfig {
    long max_outer = 1000;  ///< outer iterations to run
    int inner_T = 1;        ///< inner-loop length (run_smtfo only; 1 for sfo)
    Vec initial_input;      ///< starting input, must lie in the box
    Vec initial_state;      ///< empty -> steady state at initial_input
    double stop_tol = 0.0;  ///< early stop when ||du||_inf < tol; 0 disables
    long seed = 0;          ///< reserved for randomized initialization; echoed
};

/// One gradient step of a run: the input in effect while y was measured,
/// the measurement, the cost, and the running work counters after the
/// plant step that closes the iteration.
struct IterationRecord {
    long k = 0;      ///< global plant-step index (0-based)
    long outer = 0;  ///< outer iteration this step belongs to
    Vec u;
    Vec y;
    double cost = 0.0;
    long n_lin = 0;  ///< linearizations performed so far
    long n_fwd = 0;  ///< plant steps performed so far
};

struct TrajectoryLog {
    std::string algorithm;
    RunConfig config;  ///< echo of the configuration that produced the run
    std::vector<IterationRecord> records;

    long n_linearizations = 0;
    long n_forward_steps = 0;
    long n_gradient_steps = 0;
    long completed_outer = 0;

    Vec final_input;   ///< input after the last gradient update
    Vec final_output;  ///< last measured output
    double wall_seconds = 0.0;
};

/// Exact-sensitivity reference loop: per iteration, measure the live
/// plant, compute the true steady-state Jacobian at the current input
/// (one steady-state solve), take a projected gradient step, advance the
/// plant. cfg.inner_T is ignored.
TrajectoryLog run_ideal_fo(const Plant& plant, const ProblemSpec& prob,
                           const RunConfig& cfg);

/// Sequential-linearization loop: per iteration, linearize the plant at
/// the current (state, input) instead of solving for a steady state,
/// then measure / gradient-step / advance. Requires cfg.inner_T == 1.
TrajectoryLog run_sfo(const Plant& plant, const ProblemSpec& prob,
                      const RunConfig& cfg);

/// Multi-timescale variant: linearize once per outer iteration and reuse
/// the frozen sensitivity for cfg.inner_T measure/gradient/advance steps.
/// With inner_T == 1 this is exactly run_sfo.
TrajectoryLog run_smtfo(const Plant& plant, const ProblemSpec& prob,
                        const RunConfig& cfg);

}  // namespace seqfo
