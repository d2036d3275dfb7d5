#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqfo/harness.hpp"

namespace {

std::vector<double> parse_list(const std::string& text,
                               const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t used = 0;
            const double v = std::stod(tok, &used);
            while (used < tok.size() && std::isspace(tok[used])) ++used;
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw seqfo::InvalidArgumentError(flag + ": bad number '" + tok +
                                              "' in list '" + text + "'");
        }
    }
    if (out.empty())
        throw seqfo::InvalidArgumentError(flag + ": empty list");
    return out;
}

/// Raw CLI values for one subcommand; only values the user actually passed
/// (sub->count(...) > 0) are copied over the JSON config.
struct RawOpts {
    std::string config, plant, algorithm, out, sweep_param;
    std::string sweep_values, initial_input, initial_state;
    long max_outer = 0, seed = 0;
    int inner_T = 0, jobs = 0, samples = 0;
    double alpha = 0, alpha_yaw = 0, stop_tol = 0, mu = 0, mu_gamma = 0,
           p_ref = 0;
    bool emit_plot = false, estimate = false;
};

void add_common_options(CLI::App* sub, RawOpts& r) {
    sub->add_option("--config", r.config,
                    "JSON config file applied before other flags");
    sub->add_option("--plant", r.plant,
                    "plant selector: lti | scalar | farm:<layout.json>");
    sub->add_option("--alpha", r.alpha,
                    "gradient step size (thrust block on farms)");
    sub->add_option("--inner_T", r.inner_T,
                    "plant steps per linearization (multi-timescale loop)");
    sub->add_option("--seed", r.seed, "seed for randomized subroutines");
    sub->add_option("--mu", r.mu, "farm thrust regularization weight");
    sub->add_option("--mu_gamma", r.mu_gamma,
                    "farm yaw regularization weight");
    sub->add_option("--p_ref", r.p_ref, "farm power reference");
    sub->add_option("--out", r.out, "output directory");
}

void add_run_options(CLI::App* sub, RawOpts& r) {
    add_common_options(sub, r);
    sub->add_option("--algorithm", r.algorithm,
                    "controller: ideal | sfo | smtfo");
    sub->add_option("--max_outer", r.max_outer,
                    "maximum outer (linearization) iterations");
    sub->add_option("--alpha_yaw", r.alpha_yaw,
                    "yaw-block step size in degrees (farm only)");
    sub->add_option("--initial_input", r.initial_input,
                    "comma-separated initial input vector");
    sub->add_option("--initial_state", r.initial_state,
                    "comma-separated initial state vector");
    sub->add_option("--stop_tol", r.stop_tol,
                    "early-stop threshold on input movement per outer "
                    "iteration (0 disables)");
    sub->add_flag("--emit_plot", r.emit_plot,
                  "also write an SVG power chart");
}

bool given(CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

seqfo::ExperimentConfig build_config(CLI::App* sub, const RawOpts& r) {
    seqfo::ExperimentConfig cfg;
    if (given(sub, "--config")) cfg.apply_json_file(r.config);
    if (given(sub, "--plant")) cfg.plant = r.plant;
    if (given(sub, "--algorithm")) cfg.algorithm = r.algorithm;
    if (given(sub, "--max_outer")) cfg.max_outer = r.max_outer;
    if (given(sub, "--inner_T")) cfg.inner_T = r.inner_T;
    if (given(sub, "--alpha")) cfg.alpha = r.alpha;
    if (given(sub, "--alpha_yaw")) cfg.alpha_yaw = r.alpha_yaw;
    if (given(sub, "--initial_input"))
        cfg.initial_input = parse_list(r.initial_input, "--initial_input");
    if (given(sub, "--initial_state"))
        cfg.initial_state = parse_list(r.initial_state, "--initial_state");
    if (given(sub, "--stop_tol")) cfg.stop_tol = r.stop_tol;
    if (given(sub, "--seed")) cfg.seed = r.seed;
    if (given(sub, "--mu")) cfg.mu = r.mu;
    if (given(sub, "--mu_gamma")) cfg.mu_gamma = r.mu_gamma;
    if (given(sub, "--p_ref")) cfg.p_ref = r.p_ref;
    if (given(sub, "--out")) cfg.out_dir = r.out;
    if (given(sub, "--emit_plot")) cfg.emit_plot = r.emit_plot;
    if (given(sub, "--sweep_param")) cfg.sweep_param = r.sweep_param;
    if (given(sub, "--sweep_values"))
        cfg.sweep_values = parse_list(r.sweep_values, "--sweep_values");
    if (given(sub, "--jobs")) cfg.jobs = r.jobs;
    if (given(sub, "--samples")) cfg.estimate_samples = r.samples;
    if (given(sub, "--estimate")) cfg.force_estimate = r.estimate;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Feedback-optimization harness: drive gradient controllers against "
        "simulated plants, certify step sizes against closed-loop stability "
        "bounds, sweep parameters, and compare against a greedy baseline."};
    app.require_subcommand(1);

    RawOpts run_raw, certify_raw, sweep_raw, compare_raw;

    CLI::App* run = app.add_subcommand(
        "run", "run one experiment and write trajectory.csv + summary.txt");
    add_run_options(run, run_raw);

    CLI::App* certify = app.add_subcommand(
        "certify",
        "evaluate the closed-loop stability certificate for a plant");
    add_common_options(certify, certify_raw);
    certify->add_flag("--estimate", certify_raw.estimate,
                      "estimate regularity constants by sampling even when "
                      "hand-derived ones exist");
    certify->add_option("--samples", certify_raw.samples,
                        "sample count for constant estimation");

    CLI::App* sweep = app.add_subcommand(
        "sweep", "run one experiment per value of a parameter");
    add_run_options(sweep, sweep_raw);
    sweep->add_option("--sweep_param", sweep_raw.sweep_param,
                      "parameter to sweep: T | alpha | mu_gamma");
    sweep->add_option("--sweep_values", sweep_raw.sweep_values,
                      "comma-separated values");
    sweep->add_option("--jobs", sweep_raw.jobs,
                      "parallel runs (default 1)");

    CLI::App* compare = app.add_subcommand(
        "compare-greedy",
        "farm only: optimized run vs constant greedy control");
    add_run_options(compare, compare_raw);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return seqfo::cmd_run(build_config(run, run_raw));
        if (certify->parsed())
            return seqfo::cmd_certify(build_config(certify, certify_raw));
        if (sweep->parsed())
            return seqfo::cmd_sweep(build_config(sweep, sweep_raw));
        if (compare->parsed())
            return seqfo::cmd_compare_greedy(
                build_config(compare, compare_raw));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
