#include "seqfo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;

namespace seqfo {

namespace {

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string vec_str(const Vec& v) {
    std::string s = "[";
    for (long i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += num(v(i));
    }
    return s + "]";
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out(static_cast<long>(i)) = v[i];
    return out;
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgumentError("cannot open for writing: " + path);
    return out;
}

std::string sanitize_cell(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace

void ExperimentConfig::apply_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgumentError("config: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw InvalidArgumentError("config: bad JSON in " + path + ": " +
                                   e.what());
    }
    try {
        if (j.contains("plant")) plant = j["plant"].get<std::string>();
        if (j.contains("algorithm"))
            algorithm = j["algorithm"].get<std::string>();
        if (j.contains("max_outer")) max_outer = j["max_outer"].get<long>();
        if (j.contains("inner_T")) inner_T = j["inner_T"].get<int>();
        if (j.contains("alpha")) alpha = j["alpha"].get<double>();
        if (j.contains("alpha_yaw")) alpha_yaw = j["alpha_yaw"].get<double>();
        if (j.contains("initial_input"))
            initial_input = j["initial_input"].get<std::vector<double>>();
        if (j.contains("initial_state"))
            initial_state = j["initial_state"].get<std::vector<double>>();
        if (j.contains("stop_tol")) stop_tol = j["stop_tol"].get<double>();
        if (j.contains("seed")) seed = j["seed"].get<long>();
        if (j.contains("mu")) mu = j["mu"].get<double>();
        if (j.contains("mu_gamma")) mu_gamma = j["mu_gamma"].get<double>();
        if (j.contains("p_ref")) p_ref = j["p_ref"].get<double>();
        if (j.contains("out")) out_dir = j["out"].get<std::string>();
        if (j.contains("emit_plot")) emit_plot = j["emit_plot"].get<bool>();
        if (j.contains("sweep_param"))
            sweep_param = j["sweep_param"].get<std::string>();
        if (j.contains("sweep_values"))
            sweep_values = j["sweep_values"].get<std::vector<double>>();
        if (j.contains("jobs")) jobs = j["jobs"].get<int>();
        if (j.contains("estimate_samples"))
            estimate_samples = j["estimate_samples"].get<int>();
        if (j.contains("force_estimate"))
            force_estimate = j["force_estimate"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgumentError("config: bad field in " + path + ": " +
                                   e.what());
    }
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    if (cfg.plant == "lti") {
        return BuiltExperiment{make_lti_benchmark(cfg.alpha.value_or(0.1)),
                               false, FarmLayout{}};
    }
    if (cfg.plant == "scalar") {
        return BuiltExperiment{make_scalar_benchmark(cfg.alpha.value_or(0.3)),
                               false, FarmLayout{}};
    }
    if (cfg.plant.rfind("farm:", 0) == 0) {
        FarmLayout layout = FarmLayout::from_json(cfg.plant.substr(5));
        if (cfg.mu) layout.mu = *cfg.mu;
        if (cfg.mu_gamma) layout.mu_gamma = *cfg.mu_gamma;
        if (cfg.p_ref) layout.p_ref = *cfg.p_ref;
        layout.validate();
        const int n = layout.n_turbines();
        Benchmark b{"farm", farm_plant(layout),
                    farm_problem(layout, cfg.alpha.value_or(0.25),
                                 cfg.alpha_yaw.value_or(3.0)),
                    std::nullopt, Vec::Zero(n),
                    Vec::Constant(n, layout.free_stream)};
        return BuiltExperiment{std::move(b), true, std::move(layout)};
    }
    throw InvalidArgumentError(
        "unknown plant selector '" + cfg.plant +
        "' (expected lti, scalar, or farm:<layout.json>)");
}

RunConfig make_run_config(const ExperimentConfig& cfg,
                          const BuiltExperiment& built) {
    RunConfig rc;
    rc.max_outer = cfg.max_outer;
    rc.inner_T = cfg.algorithm == "smtfo" ? cfg.inner_T : 1;
    rc.stop_tol = cfg.stop_tol;
    rc.seed = cfg.seed;
    if (cfg.initial_input) {
        rc.initial_input = to_vec(*cfg.initial_input);
    } else if (built.is_farm) {
        rc.initial_input = greedy_baseline(built.layout).flatten();
    } else {
        rc.initial_input = Vec::Zero(built.bench.plant.input_dim());
    }
    if (cfg.initial_state) rc.initial_state = to_vec(*cfg.initial_state);
    return rc;
}

TrajectoryLog execute(const ExperimentConfig& cfg,
                      const BuiltExperiment& built) {
    const RunConfig rc = make_run_config(cfg, built);
    if (cfg.algorithm == "ideal")
        return run_ideal_fo(built.bench.plant, built.bench.problem, rc);
    if (cfg.algorithm == "sfo")
        return run_sfo(built.bench.plant, built.bench.problem, rc);
    if (cfg.algorithm == "smtfo")
        return run_smtfo(built.bench.plant, built.bench.problem, rc);
    throw InvalidArgumentError("unknown algorithm '" + cfg.algorithm +
                               "' (expected ideal, sfo, or smtfo)");
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
    std::ofstream out = open_out(path);
    if (log.records.empty())
        throw InvalidArgumentError("write_trajectory_csv: empty log");
    const long p = log.records.front().u.size();
    const long m = log.records.front().y.size();

    out << "k,outer";
    for (long i = 0; i < p; ++i) out << ",u_" << i;
    for (long i = 0; i < m; ++i) out << ",y_" << i;
    out << ",cost,total_power,n_lin,n_fwd,elapsed_s\n";

    for (const auto& rec : log.records) {
        out << rec.k << ',' << rec.outer;
        for (long i = 0; i < p; ++i) out << ',' << num(rec.u(i));
        for (long i = 0; i < m; ++i) out << ',' << num(rec.y(i));
        out << ',' << num(rec.cost) << ',' << num(rec.y.sum()) << ','
            << rec.n_lin << ',' << rec.n_fwd << ','
            << num(static_cast<double>(rec.k)) << '\n';
    }
}

void write_summary(const std::string& path, const TrajectoryLog& log,
                   const BuiltExperiment& built,
                   const std::optional<Certificate>& cert) {
    std::ofstream out = open_out(path);
    out << "plant = " << built.bench.name << "\n";
    out << "algorithm = " << log.algorithm << "\n";
    out << "completed_outer = " << log.completed_outer << "\n";
    out << "n_linearizations = " << log.n_linearizations << "\n";
    out << "n_forward_steps = " << log.n_forward_steps << "\n";
    out << "n_gradient_steps = " << log.n_gradient_steps << "\n";
    out << "final_input = " << vec_str(log.final_input) << "\n";
    out << "final_output = " << vec_str(log.final_output) << "\n";
    out << "final_cost = " << num(log.records.back().cost) << "\n";
    out << "final_total_power = " << num(log.records.back().y.sum()) << "\n";
    out << "wall_seconds = " << num(log.wall_seconds) << "\n";
    if (cert) {
        out << "\n[certificate]\n" << cert->to_kv_block();
    } else {
        out << "\ncertificate: not available (no regularity constants for "
               "this plant)\n";
    }
}

std::vector<double> total_power_series(const TrajectoryLog& log) {
    std::vector<double> s;
    s.reserve(log.records.size());
    for (const auto& rec : log.records) s.push_back(rec.y.sum());
    return s;
}

double steady_mean(const std::vector<double>& series) {
    if (series.empty())
        throw InvalidArgumentError("steady_mean: empty series");
    const size_t n = series.size();
    const size_t start = n - std::max<size_t>(1, n / 10);
    double acc = 0.0;
    for (size_t i = start; i < n; ++i) acc += series[i];
    return acc / static_cast<double>(n - start);
}

double max_input_deviation(const TrajectoryLog& a, const TrajectoryLog& b) {
    const size_t n = std::min(a.records.size(), b.records.size());
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i)
        worst = std::max(worst, (a.records[i].u - b.records[i].u).norm());
    return worst;
}

void write_power_plot_svg(const std::string& path, const TrajectoryLog& log) {
    const std::vector<double> raw = total_power_series(log);
    const long n = static_cast<long>(raw.size());
    if (n == 0) throw InvalidArgumentError("write_power_plot_svg: empty run");

    // Centered moving average, window = max(5, 1% of the run length).
    const long w = std::max<long>(5, n / 100);
    std::vector<double> avg(raw.size());
    for (long i = 0; i < n; ++i) {
        const long lo = std::max<long>(0, i - w / 2);
        const long hi = std::min<long>(n - 1, i + w / 2);
        double acc = 0.0;
        for (long j = lo; j <= hi; ++j) acc += raw[j];
        avg[i] = acc / static_cast<double>(hi - lo + 1);
    }

    double ymin = raw[0], ymax = raw[0];
    for (double v : raw) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (ymax == ymin) {
        ymax += 1.0;
        ymin -= 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double W = 900, H = 520, ml = 80, mr = 20, mt = 20, mb = 50;
    auto px = [&](double k) {
        return ml + (W - ml - mr) * (n > 1 ? k / (n - 1) : 0.5);
    };
    auto py = [&](double v) {
        return H - mb - (H - mt - mb) * (v - ymin) / (ymax - ymin);
    };

    auto label = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };

    const long stride = std::max<long>(1, n / 2000);
    auto polyline = [&](const std::vector<double>& series,
                        const char* color) {
        std::ostringstream os;
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.2\" points=\"";
        for (long i = 0; i < n; i += stride)
            os << px(static_cast<double>(i)) << ',' << py(series[i]) << ' ';
        os << px(static_cast<double>(n - 1)) << ',' << py(series[n - 1]);
        os << "\"/>\n";
        return os.str();
    };

    std::ofstream out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
        << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";
    // Axes.
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
        << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
        << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double k = (n - 1) * t / 5.0;
        const double v = ymin + (ymax - ymin) * t / 5.0;
        out << "<line x1=\"" << px(k) << "\" y1=\"" << H - mb << "\" x2=\""
            << px(k) << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(k) << "\" y=\"" << H - mb + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">"
            << static_cast<long>(k) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(v) << "\" x2=\""
            << ml << "\" y2=\"" << py(v) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << label(v)
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
        << "\" font-size=\"13\" text-anchor=\"middle\">step k</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
           "18 "
        << (mt + H - mb) / 2 << ")\">total power</text>\n";
    out << polyline(raw, "#9ecae1");
    out << polyline(avg, "#d62728");
    // Legend.
    out << "<line x1=\"" << W - 230 << "\" y1=\"30\" x2=\"" << W - 200
        << "\" y2=\"30\" stroke=\"#9ecae1\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - 194
        << "\" y=\"34\" font-size=\"12\">total power (raw)</text>\n";
    out << "<line x1=\"" << W - 230 << "\" y1=\"50\" x2=\"" << W - 200
        << "\" y2=\"50\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - 194
        << "\" y=\"54\" font-size=\"12\">moving average</text>\n";
    out << "</svg>\n";
}

CompareResult compare_with_greedy(const ExperimentConfig& cfg) {
    BuiltExperiment built = build_experiment(cfg);
    if (!built.is_farm)
        throw InvalidArgumentError(
            "compare-greedy requires a farm:<layout.json> plant selector");

    CompareResult res;
    res.run_log = execute(cfg, built);
    res.p_run = total_power_series(res.run_log);

    // Greedy rollout from the same initial state on the same step axis.
    const RunConfig rc = make_run_config(cfg, built);
    const Plant& plant = built.bench.plant;
    Vec x = rc.initial_state.size() > 0 ? rc.initial_state
                                        : steady_state(plant, rc.initial_input);
    const Vec ug = greedy_baseline(built.layout).flatten();
    res.p_greedy.reserve(res.p_run.size());
    for (size_t k = 0; k < res.p_run.size(); ++k) {
        res.p_greedy.push_back(plant.measure(x, ug).sum());
        x = plant.step(x, ug);
    }

    res.steady_greedy = steady_mean(res.p_greedy);
    res.steady_run = steady_mean(res.p_run);
    res.gain_percent =
        100.0 * (res.steady_run - res.steady_greedy) / res.steady_greedy;
    return res;
}

namespace {

/// Asymptotic error for a sweep row: largest deviation from the
/// exact-sensitivity reference started at the same point. For step-size
/// sweeps the deviation is scaled by (1 - rho_M), the certificate's
/// amplification factor, which isolates the step-size-squared mechanism
/// the bound predicts. Blank when no reference is available (farms).
std::optional<double> sweep_asymptotic_error(const ExperimentConfig& run_cfg,
                                             const BuiltExperiment& built,
                                             const TrajectoryLog& log) {
    if (built.is_farm || !built.bench.constants) return std::nullopt;
    ExperimentConfig ideal_cfg = run_cfg;
    ideal_cfg.algorithm = "ideal";
    ideal_cfg.max_outer = log.n_forward_steps;
    ideal_cfg.inner_T = 1;
    const TrajectoryLog ref = execute(ideal_cfg, built);
    const double dev = max_input_deviation(log, ref);
    if (run_cfg.sweep_param == "alpha") {
        const Certificate cert = build_certificate(
            *built.bench.constants, built.bench.problem.max_step(), 1);
        if (!cert.certified) return std::nullopt;
        return dev * (1.0 - cert.rho_M);
    }
    return dev;
}

std::optional<double> sweep_error_bound(const ExperimentConfig& run_cfg,
                                        const BuiltExperiment& built) {
    if (!built.bench.constants) return std::nullopt;
    const Certificate cert = build_certificate(
        *built.bench.constants, built.bench.problem.max_step(),
        run_cfg.algorithm == "smtfo" ? run_cfg.inner_T : 1);
    if (!cert.certified) return std::nullopt;
    return run_cfg.sweep_param == "T" ? cert.smtfo_error_bound
                                      : cert.sfo_error_bound;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    const std::string& param = cfg.sweep_param;
    if (param != "T" && param != "alpha" && param != "mu_gamma")
        throw InvalidArgumentError(
            "sweep_param must be one of T, alpha, mu_gamma");
    if (cfg.sweep_values.empty())
        throw InvalidArgumentError("sweep_values must be nonempty");
    if (param == "mu_gamma" && cfg.plant.rfind("farm:", 0) != 0)
        throw InvalidArgumentError("mu_gamma sweeps require a farm plant");

    std::vector<ExperimentConfig> run_cfgs;
    for (double v : cfg.sweep_values) {
        ExperimentConfig c = cfg;
        c.sweep_values.clear();
        if (param == "T") {
            c.inner_T = static_cast<int>(std::llround(v));
            c.algorithm = "smtfo";  // T only acts on the multi-timescale loop
        } else if (param == "alpha") {
            c.alpha = v;
        } else {
            c.mu_gamma = v;
        }
        c.out_dir = cfg.out_dir + "/" + param + "_" + num(v);
        run_cfgs.push_back(std::move(c));
    }

    std::vector<SweepRow> rows(run_cfgs.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= run_cfgs.size()) return;
            SweepRow& row = rows[i];
            row.value = cfg.sweep_values[i];
            try {
                const BuiltExperiment built = build_experiment(run_cfgs[i]);
                const TrajectoryLog log = execute(run_cfgs[i], built);
                write_trajectory_csv(run_cfgs[i].out_dir + "/trajectory.csv",
                                     log);
                write_summary(run_cfgs[i].out_dir + "/summary.txt", log,
                              built, std::nullopt);
                if (run_cfgs[i].emit_plot)
                    write_power_plot_svg(run_cfgs[i].out_dir + "/plot.svg",
                                         log);
                row.final_cost = log.records.back().cost;
                row.final_power = log.records.back().y.sum();
                row.n_lin = log.n_linearizations;
                row.n_fwd = log.n_forward_steps;
                row.wall_s = log.wall_seconds;
                row.asymptotic_error =
                    sweep_asymptotic_error(run_cfgs[i], built, log);
                row.error_bound = sweep_error_bound(run_cfgs[i], built);
                row.ok = true;
                row.status = "ok";
            } catch (const std::exception& e) {
                row.ok = false;
                row.status = sanitize_cell(e.what());
            }
        }
    };

    const int jobs = std::clamp<int>(cfg.jobs, 1,
                                     static_cast<int>(run_cfgs.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

int cmd_run(const ExperimentConfig& cfg) {
    try {
        const BuiltExperiment built = build_experiment(cfg);
        const TrajectoryLog log = execute(cfg, built);
        write_trajectory_csv(cfg.out_dir + "/trajectory.csv", log);
        std::optional<Certificate> cert;
        if (built.bench.constants)
            cert = build_certificate(
                *built.bench.constants, built.bench.problem.max_step(),
                cfg.algorithm == "smtfo" ? cfg.inner_T : 1);
        write_summary(cfg.out_dir + "/summary.txt", log, built, cert);
        if (cfg.emit_plot)
            write_power_plot_svg(cfg.out_dir + "/plot.svg", log);
        std::cout << "run: " << log.algorithm << " on " << built.bench.name
                  << ", " << log.n_gradient_steps << " gradient steps, "
                  << log.n_linearizations << " linearizations, final cost "
                  << num(log.records.back().cost) << "\n"
                  << "artifacts in " << cfg.out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_certify(const ExperimentConfig& cfg) {
    try {
        const BuiltExperiment built = build_experiment(cfg);
        RegularityConstants c;
        std::string source;
        if (built.bench.constants && !cfg.force_estimate) {
            c = *built.bench.constants;
            source = "hand-derived";
        } else {
            c = estimate_constants(built.bench.plant, built.bench.problem,
                                   built.bench.state_lo,
                                   built.bench.state_hi,
                                   cfg.estimate_samples,
                                   static_cast<unsigned>(cfg.seed));
            source = "estimated";
        }
        const Certificate cert = build_certificate(
            c, built.bench.problem.max_step(), cfg.inner_T);
        std::cout << "constants_source = " << source << "\n"
                  << cert.to_kv_block();
        return cert.certified ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "certify failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const ExperimentConfig& cfg) {
    try {
        const std::vector<SweepRow> rows = run_sweep(cfg);
        std::ofstream out = open_out(cfg.out_dir + "/sweep.csv");
        out << "value,final_cost,final_power,asymptotic_error_if_known,"
               "n_lin,n_fwd,wall_s,status,error_bound\n";
        bool any_ok = false;
        for (const auto& r : rows) {
            out << num(r.value) << ',';
            if (r.ok)
                out << num(r.final_cost) << ',' << num(r.final_power) << ','
                    << (r.asymptotic_error ? num(*r.asymptotic_error) : "")
                    << ',' << r.n_lin << ',' << r.n_fwd << ','
                    << num(r.wall_s);
            else
                out << ",,,,,";
            out << ',' << r.status << ','
                << (r.error_bound ? num(*r.error_bound) : "") << '\n';
            any_ok = any_ok || r.ok;
        }
        std::cout << "sweep over " << cfg.sweep_param << ": " << rows.size()
                  << " runs, results in " << cfg.out_dir << "/sweep.csv\n";
        return any_ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "sweep failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_compare_greedy(const ExperimentConfig& cfg) {
    try {
        const CompareResult res = compare_with_greedy(cfg);
        std::ofstream out = open_out(cfg.out_dir + "/compare.csv");
        out << "k,p_greedy,p_run\n";
        for (size_t k = 0; k < res.p_run.size(); ++k)
            out << k << ',' << num(res.p_greedy[k]) << ','
                << num(res.p_run[k]) << '\n';
        std::cout << "steady_power_greedy = " << num(res.steady_greedy)
                  << "\n"
                  << "steady_power_run = " << num(res.steady_run) << "\n"
                  << "gain_percent = " << num(res.gain_percent) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "compare-greedy failed: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace seqfo
