// Experiment driver around the expansion solver: loads a JSON config,
// runs one of {solve, compare, moments, check}, and writes CSV/JSON
// artifacts.  Unknown config keys are rejected; all randomness flows from
// the single config seed.  Exit codes: 0 success, 1 verdict failure,
// 2 config error, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hermex/baselines.hpp"
#include "hermex/models.hpp"
#include "hermex/quadrature.hpp"
#include "hermex/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw hermex::ConfigError(msg); }

void require_allowed_keys(const json& obj, const std::string& where,
                          std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) fail("unknown key \"" + it.key() + "\" in " + where);
    }
}

const json& need(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) fail(where + " is missing required key \"" + std::string(key) + "\"");
    return obj.at(key);
}

double need_number(const json& obj, const std::string& where, const char* key) {
    const json& v = need(obj, where, key);
    if (!v.is_number()) fail(where + " key \"" + std::string(key) + "\" must be a number");
    return v.get<double>();
}

long long need_integer(const json& obj, const std::string& where, const char* key) {
    const json& v = need(obj, where, key);
    if (!v.is_number_integer()) fail(where + " key \"" + std::string(key) + "\" must be an integer");
    return v.get<long long>();
}

std::string need_string(const json& obj, const std::string& where, const char* key) {
    const json& v = need(obj, where, key);
    if (!v.is_string()) fail(where + " key \"" + std::string(key) + "\" must be a string");
    return v.get<std::string>();
}

// {"kind": "constant", "value": c} | {"kind": "sine"} | {"kind": "power", "exponent": p}
hermex::TimeFunction time_function_from(const json& j, const std::string& where) {
    require_allowed_keys(j, where, {"kind", "value", "exponent"});
    const std::string kind = need_string(j, where, "kind");
    if (kind == "constant") return hermex::TimeFunction::constant(need_number(j, where, "value"));
    if (kind == "sine") return hermex::TimeFunction::sine();
    if (kind == "power") return hermex::TimeFunction::power(need_number(j, where, "exponent"));
    fail(where + " kind must be one of constant, sine, power (got \"" + kind + "\")");
}

struct Experiment {
    json echo;  // normalized config: re-running it reproduces all CSV output
    hermex::ModelSpec model;

    bool has_solver = false;
    hermex::SolverConfig solver;
    double horizon = 1.0;
    bool use_companion = true;

    bool has_baselines = false;
    int paths = 0;
    std::uint64_t seed = 0;
    bool predictor_corrector = false;

    int grid_points = 21;
    std::string out_dir = ".";
};

hermex::ModelSpec model_from(const json& m) {
    const std::string name = need_string(m, "model", "name");
    if (name == "gbm") {
        require_allowed_keys(m, "model", {"name", "mu", "sigma", "x0"});
        return hermex::gbm(time_function_from(need(m, "model", "mu"), "model.mu"),
                           need_number(m, "model", "sigma"), need_number(m, "model", "x0"));
    }
    if (name == "cir_special") {
        require_allowed_keys(m, "model", {"name", "K", "sigma_t", "x0", "scale"});
        double scale = 1.0;
        if (m.contains("scale")) scale = need_number(m, "model", "scale");
        return hermex::cir_special(need_number(m, "model", "K"),
                                   time_function_from(need(m, "model", "sigma_t"), "model.sigma_t"),
                                   need_number(m, "model", "x0"), scale);
    }
    if (name == "cir_growth") {
        require_allowed_keys(m, "model", {"name"});
        return hermex::cir_growth();
    }
    if (name == "arctan") {
        require_allowed_keys(m, "model", {"name", "a", "x0"});
        return hermex::arctan_model(need_number(m, "model", "a"), need_number(m, "model", "x0"));
    }
    if (name == "counterexample") {
        require_allowed_keys(m, "model", {"name"});
        return hermex::counterexample();
    }
    fail("model.name \"" + name + "\" is not registered (gbm, cir_special, cir_growth, arctan, counterexample)");
}

Experiment parse_experiment(const json& cfg, bool need_solver,
                            const std::optional<std::uint64_t>& seed_override,
                            const std::string& out_override) {
    require_allowed_keys(cfg, "config", {"model", "solver", "baselines", "comparison", "output"});
    Experiment ex;
    ex.model = model_from(need(cfg, "config", "model"));
    ex.horizon = ex.model.problem.horizon;

    json echo;
    echo["model"] = cfg.at("model");

    if (cfg.contains("solver")) {
        const json& s = cfg.at("solver");
        require_allowed_keys(s, "solver",
                             {"N", "M", "T", "Q", "startup_epsilon", "rk2_variant", "use_companion"});
        const long long n = need_integer(s, "solver", "N");
        if (n < 1) fail("solver.N must be at least 1");
        const long long m = need_integer(s, "solver", "M");
        if (m < 2) fail("solver.M must be at least 2");
        const double t = need_number(s, "solver", "T");
        if (!(t > 0.0)) fail("solver.T must be positive");
        ex.has_solver = true;
        ex.solver.truncation_order = static_cast<int>(n);
        ex.solver.time_steps = static_cast<int>(m);
        ex.horizon = t;
        if (s.contains("Q")) ex.solver.quadrature_order = static_cast<int>(need_integer(s, "solver", "Q"));
        if (s.contains("startup_epsilon"))
            ex.solver.startup_epsilon = need_number(s, "solver", "startup_epsilon");
        std::string variant = "heun";
        if (s.contains("rk2_variant")) variant = need_string(s, "solver", "rk2_variant");
        if (variant == "heun")
            ex.solver.rk2_variant = hermex::Rk2Variant::heun;
        else if (variant == "midpoint")
            ex.solver.rk2_variant = hermex::Rk2Variant::midpoint;
        else
            fail("solver.rk2_variant must be \"heun\" or \"midpoint\"");
        if (s.contains("use_companion")) {
            if (!s.at("use_companion").is_boolean()) fail("solver.use_companion must be a boolean");
            ex.use_companion = s.at("use_companion").get<bool>();
        }
        echo["solver"] = {{"N", ex.solver.truncation_order},
                          {"M", ex.solver.time_steps},
                          {"T", ex.horizon},
                          {"Q", ex.solver.quadrature_order},
                          {"startup_epsilon", ex.solver.startup_epsilon},
                          {"rk2_variant", variant},
                          {"use_companion", ex.use_companion}};
    } else if (need_solver) {
        fail("config is missing required section \"solver\"");
    }

    if (cfg.contains("baselines")) {
        const json& b = cfg.at("baselines");
        require_allowed_keys(b, "baselines", {"schemes", "paths", "seed", "predictor_corrector"});
        const long long p = need_integer(b, "baselines", "paths");
        if (p < 1) fail("baselines.paths must be at least 1");
        ex.has_baselines = true;
        ex.paths = static_cast<int>(p);
        const json& sv = need(b, "baselines", "seed");
        if (!sv.is_number_integer()) fail("baselines.seed must be an integer");
        ex.seed = sv.get<std::uint64_t>();
        if (b.contains("schemes")) {
            if (!b.at("schemes").is_array()) fail("baselines.schemes must be an array");
            for (const auto& s : b.at("schemes")) {
                if (!s.is_string() ||
                    (s.get<std::string>() != "em" && s.get<std::string>() != "milstein"))
                    fail("baselines.schemes entries must be \"em\" or \"milstein\"");
            }
        }
        if (b.contains("predictor_corrector")) {
            if (!b.at("predictor_corrector").is_boolean())
                fail("baselines.predictor_corrector must be a boolean");
            ex.predictor_corrector = b.at("predictor_corrector").get<bool>();
        }
    }
    if (seed_override) {
        if (!ex.has_baselines) fail("--seed was given but the config has no baselines section");
        ex.seed = *seed_override;
    }
    if (ex.has_baselines)
        echo["baselines"] = {{"paths", ex.paths},
                             {"seed", ex.seed},
                             {"schemes", json::array({"em", "milstein"})},
                             {"predictor_corrector", ex.predictor_corrector}};

    if (cfg.contains("comparison")) {
        const json& c = cfg.at("comparison");
        require_allowed_keys(c, "comparison", {"grid_points"});
        if (c.contains("grid_points")) {
            const long long g = need_integer(c, "comparison", "grid_points");
            if (g < 2) fail("comparison.grid_points must be at least 2");
            ex.grid_points = static_cast<int>(g);
        }
    }
    echo["comparison"] = {{"grid_points", ex.grid_points}};

    if (cfg.contains("output")) {
        const json& o = cfg.at("output");
        require_allowed_keys(o, "output", {"directory"});
        if (o.contains("directory")) ex.out_dir = need_string(o, "output", "directory");
    }
    if (!out_override.empty()) ex.out_dir = out_override;
    echo["output"] = {{"directory", ex.out_dir}};

    ex.model.problem.horizon = ex.horizon;
    if (ex.model.companion) ex.model.companion->problem.horizon = ex.horizon;
    ex.echo = std::move(echo);
    return ex;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) fail("cannot open output file " + p.string());
    return f;
}

struct SolveProduct {
    hermex::ExpansionSolution solution;
    bool companion_space;
    std::function<double(double)> to_x;  // identity when null

    double state_value(double x, int i) const {
        const double v = solution.evaluate(x, i);
        return to_x ? to_x(v) : v;
    }
};

SolveProduct solve_expansion(const Experiment& ex) {
    const bool comp = ex.use_companion && ex.model.companion.has_value();
    const hermex::SdeProblem& prob = comp ? ex.model.companion->problem : ex.model.problem;
    return {hermex::integrate(prob, ex.solver), comp,
            comp ? ex.model.companion->to_x : std::function<double(double)>()};
}

void write_coefficients(const hermex::ExpansionSolution& sol, const fs::path& path) {
    auto f = open_out(path);
    f << "t";
    for (int n = 0; n <= sol.config().truncation_order; ++n) f << ",a" << n;
    f << "\n";
    for (const auto& s : sol.grid()) {
        f << fmt(s.t);
        for (double a : s.a) f << "," << fmt(a);
        f << "\n";
    }
}

// Raw moment E[X^k] at node i, mapping a companion-space surface to state
// space before taking powers; rule order covers the mapped polynomial degree.
double mapped_raw_moment(const SolveProduct& sp, int i, int k) {
    const auto& st = sp.solution.grid()[static_cast<std::size_t>(i)];
    if (i == 0) {
        const double x0 = sp.to_x ? sp.to_x(st.a[0]) : st.a[0];
        return std::pow(x0, k);
    }
    const int n = sp.solution.config().truncation_order;
    const int degree = k * n * (sp.companion_space ? 2 : 1);
    const int order = std::min(200, std::max(sp.solution.config().quadrature_order, degree / 2 + 2));
    const auto& rule = hermex::gauss_hermite_rule(order);
    return hermex::expect([&](double x) { return std::pow(sp.state_value(x, i), k); }, st.t,
                          rule);
}

double elapsed_seconds(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

json base_summary(const char* command, const Experiment& ex) {
    json s;
    s["command"] = command;
    s["config"] = ex.echo;
    s["model"] = ex.model.name;
    return s;
}

void write_summary(const json& s, const fs::path& dir) {
    auto f = open_out(dir / "summary.json");
    f << s.dump(2) << "\n";
}

int run_solve(const Experiment& ex, bool quiet) {
    const auto t0 = std::chrono::steady_clock::now();
    auto sp = solve_expansion(ex);
    const double solve_s = elapsed_seconds(t0);
    fs::create_directories(ex.out_dir);
    write_coefficients(sp.solution, fs::path(ex.out_dir) / "coefficients.csv");

    json s = base_summary("solve", ex);
    s["space"] = sp.companion_space ? "companion" : "direct";
    s["clamp_counts"] = {{"solver", sp.solution.diagnostics().clamp_count}};
    s["runtime_seconds"] = {{"expansion", solve_s}};
    s["outputs"] = {{"coefficients", "coefficients.csv"}};
    write_summary(s, ex.out_dir);
    if (!quiet)
        std::cout << "solve: wrote " << (fs::path(ex.out_dir) / "coefficients.csv").string()
                  << " (" << sp.solution.grid().size() << " rows, "
                  << (sp.companion_space ? "companion" : "direct") << " space)\n";
    return 0;
}

struct ErrorStats {
    double mean = 0.0;
    double max = 0.0;
    long long used = 0;

    void add(double err) {
        mean += err;
        max = std::max(max, err);
        ++used;
    }
    void finish() {
        if (used > 0) mean /= static_cast<double>(used);
    }
};

int run_compare(const Experiment& ex, bool quiet) {
    if (!ex.model.exact) fail("model \"" + ex.model.name + "\" has no exact solution map: no oracle to compare against");
    if (!ex.has_baselines) fail("compare requires the baselines section (paths, seed)");

    const auto t0 = std::chrono::steady_clock::now();
    auto sp = solve_expansion(ex);
    const double solve_s = elapsed_seconds(t0);

    const int m = ex.solver.time_steps;
    const auto t1 = std::chrono::steady_clock::now();
    auto paths = hermex::generate_paths(ex.seed, ex.paths, m, ex.horizon);
    hermex::BaselineOptions opt;
    opt.keep_trajectories = true;
    opt.predictor_corrector = ex.predictor_corrector;
    auto em = hermex::euler_maruyama(ex.model.problem, paths, opt);
    auto mil = hermex::milstein(ex.model.problem, paths, ex.model.diffusion_dx, opt);
    const double baseline_s = elapsed_seconds(t1);

    fs::create_directories(ex.out_dir);
    write_coefficients(sp.solution, fs::path(ex.out_dir) / "coefficients.csv");
    auto f = open_out(fs::path(ex.out_dir) / "errors.csv");
    f << "t,err_expansion_mean,err_expansion_max,err_em_mean,err_em_max,err_mil_mean,err_mil_max\n";

    std::vector<double> w(ex.paths, 0.0);  // running Brownian value per path
    const double h = ex.horizon / m;
    double max_exp = 0.0, max_em = 0.0, max_mil = 0.0;
    for (int i = 0; i <= m; ++i) {
        if (i > 0)
            for (int p = 0; p < ex.paths; ++p) w[p] += paths.increment(p, i - 1);
        const double t = (i == m) ? ex.horizon : i * h;
        ErrorStats se, sem, smil;
        for (int p = 0; p < ex.paths; ++p) {
            const double exact = ex.model.exact(t, w[p]);
            se.add(std::fabs(sp.state_value(w[p], i) - exact));
            const double xe = em.trajectories[p][i];
            if (std::isfinite(xe)) sem.add(std::fabs(xe - exact));
            const double xm = mil.trajectories[p][i];
            if (std::isfinite(xm)) smil.add(std::fabs(xm - exact));
        }
        se.finish();
        sem.finish();
        smil.finish();
        max_exp = std::max(max_exp, se.max);
        max_em = std::max(max_em, sem.max);
        max_mil = std::max(max_mil, smil.max);
        f << fmt(t) << "," << fmt(se.mean) << "," << fmt(se.max) << "," << fmt(sem.mean) << ","
          << fmt(sem.max) << "," << fmt(smil.mean) << "," << fmt(smil.max) << "\n";
    }

    long long em_failed = 0, mil_failed = 0;
    for (int p = 0; p < ex.paths; ++p) {
        em_failed += (em.failed_step[p] >= 0);
        mil_failed += (mil.failed_step[p] >= 0);
    }

    json s = base_summary("compare", ex);
    s["space"] = sp.companion_space ? "companion" : "direct";
    s["seed"] = ex.seed;
    s["max_errors"] = {{"expansion", max_exp}, {"em", max_em}, {"milstein", max_mil}};
    s["clamp_counts"] = {{"solver", sp.solution.diagnostics().clamp_count},
                         {"em", em.clamp_count},
                         {"milstein", mil.clamp_count}};
    s["failed_paths"] = {{"em", em_failed}, {"milstein", mil_failed}};
    s["runtime_seconds"] = {{"expansion", solve_s}, {"baselines", baseline_s}};
    s["outputs"] = {{"coefficients", "coefficients.csv"}, {"errors", "errors.csv"}};
    write_summary(s, ex.out_dir);
    if (!quiet)
        std::cout << "compare: max abs error expansion " << fmt(max_exp) << ", em " << fmt(max_em)
                  << ", milstein " << fmt(max_mil) << " over " << ex.paths << " paths\n";
    return 0;
}

int run_moments(const Experiment& ex, bool quiet) {
    const auto t0 = std::chrono::steady_clock::now();
    auto sp = solve_expansion(ex);
    const double solve_s = elapsed_seconds(t0);

    std::optional<hermex::SchemeResult> em;
    double baseline_s = 0.0;
    if (ex.has_baselines) {
        const auto t1 = std::chrono::steady_clock::now();
        auto paths = hermex::generate_paths(ex.seed, ex.paths, ex.solver.time_steps, ex.horizon);
        hermex::BaselineOptions opt;
        opt.keep_trajectories = true;
        opt.predictor_corrector = ex.predictor_corrector;
        em = hermex::euler_maruyama(ex.model.problem, paths, opt);
        baseline_s = elapsed_seconds(t1);
    }

    fs::create_directories(ex.out_dir);
    auto f = open_out(fs::path(ex.out_dir) / "moments.csv");
    f << "t,mean_expansion,var_expansion,m3,m4";
    if (em) f << ",mean_mc,var_mc,mc_stderr";
    f << "\n";

    const int m = ex.solver.time_steps;
    double mean_T = 0.0, var_T = 0.0;
    for (int i = 0; i <= m; ++i) {
        const auto& st = sp.solution.grid()[static_cast<std::size_t>(i)];
        double mean, var;
        if (sp.companion_space) {
            // E[X] = E[U^2] comes straight from the coefficient identity;
            // higher powers of the mapped surface go through quadrature.
            mean = sp.solution.moments(i).second;
            var = (i == 0) ? 0.0 : mapped_raw_moment(sp, i, 2) - mean * mean;
        } else {
            auto mom = sp.solution.moments(i);
            mean = mom.mean;
            var = mom.variance;
        }
        double m3, m4;
        if (i == 0 || sp.companion_space) {
            m3 = mapped_raw_moment(sp, i, 3);
            m4 = mapped_raw_moment(sp, i, 4);
        } else {
            m3 = sp.solution.higher_moment(i, 3);
            m4 = sp.solution.higher_moment(i, 4);
        }
        f << fmt(st.t) << "," << fmt(mean) << "," << fmt(var) << "," << fmt(m3) << "," << fmt(m4);
        if (em) {
            hermex::SchemeResult node;
            node.terminal.reserve(em->trajectories.size());
            for (const auto& traj : em->trajectories) node.terminal.push_back(traj[i]);
            auto mc = hermex::mc_moments(node);
            f << "," << fmt(mc.mean) << "," << fmt(mc.variance) << "," << fmt(mc.stderr_mean);
        }
        f << "\n";
        if (i == m) {
            mean_T = mean;
            var_T = var;
        }
    }

    json s = base_summary("moments", ex);
    s["space"] = sp.companion_space ? "companion" : "direct";
    s["terminal"] = {{"mean", mean_T}, {"variance", var_T}};
    s["clamp_counts"] = {{"solver", sp.solution.diagnostics().clamp_count}};
    s["runtime_seconds"] = {{"expansion", solve_s}, {"baselines", baseline_s}};
    if (ex.has_baselines) s["seed"] = ex.seed;
    s["outputs"] = {{"moments", "moments.csv"}};
    write_summary(s, ex.out_dir);
    if (!quiet)
        std::cout << "moments: terminal mean " << fmt(mean_T) << ", variance " << fmt(var_T)
                  << "\n";
    return 0;
}

int run_check(const Experiment& ex, bool quiet) {
    auto report = hermex::check_path_independence(ex.model, ex.grid_points);

    fs::create_directories(ex.out_dir);
    auto f = open_out(fs::path(ex.out_dir) / "residuals.csv");
    f << "x,t,residual,evaluable\n";
    for (const auto& pt : report.points)
        f << fmt(pt.x) << "," << fmt(pt.t) << "," << fmt(pt.residual) << ","
          << (pt.evaluable ? 1 : 0) << "\n";

    json s = base_summary("check", ex);
    s["verdict"] = report.verdict ? "path-independent" : "not path-independent";
    s["max_residual"] = report.max_residual;
    s["max_residual_at"] = {{"x", report.max_x}, {"t", report.max_t}};
    s["evaluation_failures"] = report.evaluation_failures;
    s["outputs"] = {{"residuals", "residuals.csv"}};
    write_summary(s, ex.out_dir);

    if (!quiet) {
        std::cout << "check: " << (report.verdict ? "path-independent" : "NOT path-independent")
                  << ", max residual " << fmt(report.max_residual) << " at x=" << fmt(report.max_x)
                  << " t=" << fmt(report.max_t) << "\n";
    }
    return report.verdict ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthogonal-expansion SDE solver and baselines"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_value = 0;
    bool quiet = false;

    std::vector<CLI::App*> subs;
    for (const char* name : {"solve", "compare", "moments", "check"}) {
        auto* sub = app.add_subcommand(name, "");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_override, "output directory (overrides config)");
        sub->add_option("--seed", seed_value, "Monte Carlo seed (overrides config)");
        sub->add_flag("--quiet", quiet, "suppress progress output");
        subs.push_back(sub);
    }
    subs[0]->description("integrate the coefficient system, write coefficients.csv");
    subs[1]->description("expansion vs EM/Milstein errors against the exact map");
    subs[2]->description("moment table from the coefficients, optional MC columns");
    subs[3]->description("probe the path-independence condition");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* active = app.get_subcommands().at(0);
    const std::string command = active->get_name();
    std::optional<std::uint64_t> seed_override;
    if (active->count("--seed") > 0) seed_override = seed_value;

    try {
        std::ifstream cf(config_path);
        if (!cf) fail("cannot read config file " + config_path);
        json cfg;
        try {
            cfg = json::parse(cf);
        } catch (const json::parse_error& e) {
            fail(std::string("config is not valid JSON: ") + e.what());
        }
        const bool need_solver = command != "check";
        Experiment ex = parse_experiment(cfg, need_solver, seed_override, out_override);

        if (command == "solve") return run_solve(ex, quiet);
        if (command == "compare") return run_compare(ex, quiet);
        if (command == "moments") return run_moments(ex, quiet);
        return run_check(ex, quiet);
    } catch (const hermex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hermex::StartupError& e) {
        std::cerr << "numerical failure (startup, order " << e.order << "): " << e.what() << "\n";
        return 3;
    } catch (const hermex::StiffnessError& e) {
        std::cerr << "numerical failure (stiff coefficient system at t=" << e.t << ", order "
                  << e.order << "): " << e.what() << "\n";
        return 3;
    } catch (const hermex::EvaluationError& e) {
        std::cerr << "numerical failure (field evaluation at x=" << e.node_x << ", t=" << e.node_t
                  << "): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
