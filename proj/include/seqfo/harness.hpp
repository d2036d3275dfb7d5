#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqfo/algorithms.hpp"
#include "seqfo/bench.hpp"
#include "seqfo/certificates.hpp"
#include "seqfo/farm.hpp"

namespace seqfo {

/// One experiment as described by a JSON config file and/or CLI flags.
/// Optional fields fall back to per-plant defaults at build time.
struct ExperimentConfig {
    std::string plant = "scalar";    ///< lti | scalar | farm:<layout.json>
    std::string algorithm = "sfo";   ///< ideal | sfo | smtfo
    long max_outer = 1000;
    int inner_T = 1;
    std::optional<double> alpha;     ///< gradient step (thrust block on farms)
    std::optional<double> alpha_yaw; ///< yaw-block step (farm only)
    std::optional<std::vector<double>> initial_input;
    std::optional<std::vector<double>> initial_state;
    double stop_tol = 0.0;
    long seed = 0;
    std::optional<double> mu;        ///< farm thrust regularization override
    std::optional<double> mu_gamma;  ///< farm yaw regularization override
    std::optional<double> p_ref;     ///< farm power reference override
    std::string out_dir = "out";
    bool emit_plot = false;
    std::string sweep_param;         ///< T | alpha | mu_gamma
    std::vector<double> sweep_values;
    int jobs = 1;                    ///< parallel sweep runs
    int estimate_samples = 160;      ///< samples for constant estimation
    bool force_estimate = false;     ///< certify: ignore hand constants

    /// Merges keys from a JSON file into this config (file values replace
    /// current ones; callers apply CLI overrides afterwards).
    void apply_json_file(const std::string& path);
};

/// A resolved experiment: the benchmark pairing plus farm metadata when
/// the selector was a farm.
struct BuiltExperiment {
    Benchmark bench;
    bool is_farm = false;
    FarmLayout layout;  ///< meaningful only when is_farm
};

/// Resolves the plant selector, applies overrides, and returns the
/// ready-to-run pairing. Throws on unknown selectors or bad layouts.
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

/// RunConfig assembled from the experiment config with per-plant default
/// initial inputs (0 for lti/scalar, greedy for farms).
RunConfig make_run_config(const ExperimentConfig& cfg,
                          const BuiltExperiment& built);

/// Executes the configured algorithm. Throws on any module error.
TrajectoryLog execute(const ExperimentConfig& cfg,
                      const BuiltExperiment& built);

/// Writes the trajectory table:
///   k,outer,u_0..u_{p-1},y_0..y_{m-1},cost,total_power,n_lin,n_fwd,elapsed_s
/// elapsed_s is simulated plant time (one second per plant step), so the
/// file is byte-identical across reruns; wall time goes to summary.txt.
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

/// Human-readable run summary (final input/cost/counters, wall time, and
/// the certificate block when constants are available).
void write_summary(const std::string& path, const TrajectoryLog& log,
                   const BuiltExperiment& built,
                   const std::optional<Certificate>& cert);

/// Self-contained SVG chart of total power vs k: raw series plus a
/// centered moving average (window = max(5, 1% of the run length)).
void write_power_plot_svg(const std::string& path, const TrajectoryLog& log);

/// Mean of the final 10% of a series (at least one element).
double steady_mean(const std::vector<double>& series);

/// Per-step total power (sum of outputs) of a run.
std::vector<double> total_power_series(const TrajectoryLog& log);

/// Largest deviation max_k ||u_k - u_ref_k||_2 between two runs compared
/// step by step over their common length.
double max_input_deviation(const TrajectoryLog& a, const TrajectoryLog& b);

struct CompareResult {
    std::vector<double> p_greedy;  ///< greedy-held power per step
    std::vector<double> p_run;     ///< optimized-run power per step
    double steady_greedy = 0.0;
    double steady_run = 0.0;
    double gain_percent = 0.0;
    TrajectoryLog run_log;
};

/// Runs the configured algorithm and a constant greedy-control rollout
/// from the same initial state, on the same step axis.
CompareResult compare_with_greedy(const ExperimentConfig& cfg);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string status;  ///< "ok" or the error message
    double final_cost = 0.0;
    double final_power = 0.0;
    std::optional<double> asymptotic_error;
    long n_lin = 0;
    long n_fwd = 0;
    double wall_s = 0.0;
    std::optional<double> error_bound;
};

/// Runs one experiment per sweep value (up to cfg.jobs in parallel, each
/// in its own subdirectory) and aggregates rows in value order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

// ---- CLI entry points (exit codes: 0 ok, 1 failure, 2 uncertified) ----
int cmd_run(const ExperimentConfig& cfg);
int cmd_certify(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_compare_greedy(const ExperimentConfig& cfg);

}  // namespace seqfo
