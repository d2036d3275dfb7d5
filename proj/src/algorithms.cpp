#include "seqfo/algorithms.hpp"

#include <chrono>
#include <limits>
#include <sstream>

namespace seqfo {

namespace {

enum class SensitivityPolicy {
    Relinearize,    // linearize at the current (state, input)
    ExactSteadyMap  // solve for the steady state and differentiate there
};

TrajectoryLog run_loop(const Plant& plant, const ProblemSpec& prob,
                       const RunConfig& cfg, SensitivityPolicy policy, int T,
                       const char* name) {
    prob.validate();
    if (prob.lower.size() != plant.input_dim())
        throw InvalidArgumentError(
            "run: problem box dimension does not match plant input");
    if (cfg.max_outer <= 0)
        throw InvalidArgumentError("run: max_outer must be positive");
    if (cfg.stop_tol < 0.0)
        throw InvalidArgumentError("run: stop_tol must be >= 0");

    Vec u = cfg.initial_input;
    if (u.size() != plant.input_dim())
        throw InvalidArgumentError("run: initial_input has wrong dimension");
    if ((u - project_box(u, prob.lower, prob.upper))
            .lpNorm<Eigen::Infinity>() > 0.0)
        throw InvalidArgumentError("run: initial_input lies outside the box");

    Vec x = cfg.initial_state.size() > 0 ? cfg.initial_state
                                         : steady_state(plant, u);
    if (x.size() != plant.state_dim())
        throw InvalidArgumentError("run: initial_state has wrong dimension");

    TrajectoryLog log;
    log.algorithm = name;
    log.config = cfg;
    log.records.reserve(static_cast<size_t>(cfg.max_outer) * T);

    const auto t0 = std::chrono::steady_clock::now();
    long k = 0;
    for (long outer = 0; outer < cfg.max_outer; ++outer) {
        Mat S;
        try {
            S = (policy == SensitivityPolicy::ExactSteadyMap)
                    ? exact_steady_jacobian(plant, u, 1e-12)
                    : sensitivity(linearize(plant, x, u));
        } catch (const SingularityError& e) {
            std::ostringstream os;
            os << e.what() << " [outer iteration " << outer << "]";
            throw SingularityError(os.str(), e.condition_estimate());
        }
        ++log.n_linearizations;

        double last_du = std::numeric_limits<double>::infinity();
        for (int t = 0; t < T; ++t) {
            Vec y = plant.measure(x, u);
            const double cost = prob.cost(u, y);
            if (!std::isfinite(cost))
                throw NonFiniteError("run: cost evaluated to a non-finite value");

            Vec g = composite_gradient(u, y, S, prob);
            Vec u_next = project_box(u - prob.step_sizes.cwiseProduct(g),
                                     prob.lower, prob.upper);
            if (!u_next.allFinite())
                throw NonFiniteError("run: projected input is non-finite");

            x = plant.step(x, u);  // state advances under the pre-update input
            ++k;
            ++log.n_forward_steps;
            ++log.n_gradient_steps;

            IterationRecord rec;
            rec.k = k - 1;
            rec.outer = outer;
            rec.u = u;
            rec.y = std::move(y);
            rec.cost = cost;
            rec.n_lin = log.n_linearizations;
            rec.n_fwd = log.n_forward_steps;
            log.records.push_back(std::move(rec));

            last_du = (u_next - u).lpNorm<Eigen::Infinity>();
            u = std::move(u_next);
        }
        log.completed_outer = outer + 1;
        // Early stop is only checked at outer-iteration boundaries so the
        // counter relation n_forward_steps = T * completed_outer holds.
        if (cfg.stop_tol > 0.0 && last_du < cfg.stop_tol) break;
    }

    log.final_input = u;
    log.final_output = log.records.back().y;
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return log;
}

}  // namespace

TrajectoryLog run_ideal_fo(const Plant& plant, const ProblemSpec& prob,
                           const RunConfig& cfg) {
    return run_loop(plant, prob, cfg, SensitivityPolicy::ExactSteadyMap, 1,
                    "ideal_fo");
}

TrajectoryLog run_sfo(const Plant& plant, const ProblemSpec& prob,
                      const RunConfig& cfg) {
    if (cfg.inner_T != 1)
        throw InvalidArgumentError("run_sfo: cfg.inner_T must be 1");
    return run_loop(plant, prob, cfg, SensitivityPolicy::Relinearize, 1,
                    "sfo");
}

TrajectoryLog run_smtfo(const Plant& plant, const ProblemSpec& prob,
                        const RunConfig& cfg) {
    if (cfg.inner_T < 1)
        throw InvalidArgumentError("run_smtfo: cfg.inner_T must be >= 1");
    return run_loop(plant, prob, cfg, SensitivityPolicy::Relinearize,
                    cfg.inner_T, "smtfo");
}

}  // namespace seqfo
