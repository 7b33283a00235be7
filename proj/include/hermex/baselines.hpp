#pragma once

// Reference stochastic integrators on shared Brownian paths: Euler-Maruyama
// (optionally predictor-corrector) and Milstein, plus Monte Carlo moment
// estimation.  Both schemes consume the same increment array, so cross-scheme
// error comparisons are driven by identical noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "hermex/errors.hpp"
#include "hermex/rng.hpp"
#include "hermex/sde.hpp"

namespace hermex {

// Materialized Brownian increments, increments[p*steps + s] ~ N(0, h).
struct PathEnsemble {
    std::uint64_t seed = 0;
    int paths = 0;
    int steps = 0;
    double horizon = 0.0;
    std::vector<double> increments;

    double step_size() const { return horizon / steps; }
    double increment(int path, int step) const {
        return increments[static_cast<std::size_t>(path) * steps + step];
    }
};

inline PathEnsemble generate_paths(std::uint64_t seed, int paths, int steps, double horizon) {
    if (paths < 1) throw ConfigError("path count must be at least 1");
    if (steps < 1) throw ConfigError("step count must be at least 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError("horizon must be positive and finite");
    const std::size_t total = static_cast<std::size_t>(paths) * static_cast<std::size_t>(steps);
    if (total > std::size_t{200000000})
        throw ConfigError("ensemble too large: paths * steps exceeds 2e8");
    PathEnsemble e;
    e.seed = seed;
    e.paths = paths;
    e.steps = steps;
    e.horizon = horizon;
    e.increments.resize(total);
    const double root_h = std::sqrt(horizon / steps);
    for (int p = 0; p < paths; ++p)
        for (int s = 0; s < steps; ++s)
            e.increments[static_cast<std::size_t>(p) * steps + s] =
                root_h * gaussian_draw(seed, static_cast<std::uint64_t>(p),
                                       static_cast<std::uint64_t>(s));
    return e;
}

// Per-path outcome of one scheme.  A path whose state leaves the finite
// range is abandoned at that step: terminal is NaN, failed_step records
// where, and the remaining paths are unaffected.
struct SchemeResult {
    std::vector<double> terminal;
    std::vector<long long> failed_step;  // -1 for completed paths
    long long clamp_count = 0;           // negative states seen by sqrt-type G
    std::vector<std::vector<double>> trajectories;  // kept only on request
};

struct BaselineOptions {
    bool keep_trajectories = false;
    bool predictor_corrector = false;  // one drift-averaging corrector pass
};

namespace detail {

inline void validate_baseline_inputs(const SdeProblem& problem, const PathEnsemble& ensemble) {
    if (!problem.drift || !problem.diffusion)
        throw ConfigError("problem must provide drift and diffusion fields");
    if (ensemble.paths < 1 || ensemble.steps < 1)
        throw ConfigError("ensemble is empty");
    if (ensemble.increments.size() !=
        static_cast<std::size_t>(ensemble.paths) * static_cast<std::size_t>(ensemble.steps))
        throw ConfigError("ensemble increment array has the wrong shape");
    if (std::fabs(ensemble.horizon - problem.horizon) >
        1e-12 * std::max(1.0, std::fabs(problem.horizon)))
        throw ConfigError("ensemble horizon does not match the problem horizon");
}

// Steps every path of the ensemble with `advance(x, t, dw) -> x_next`.
template <class Advance>
SchemeResult run_scheme(const SdeProblem& problem, const PathEnsemble& ensemble,
                        const BaselineOptions& opt, Advance&& advance) {
    SchemeResult out;
    out.terminal.assign(ensemble.paths, std::numeric_limits<double>::quiet_NaN());
    out.failed_step.assign(ensemble.paths, -1);
    if (opt.keep_trajectories)
        out.trajectories.assign(ensemble.paths,
                                std::vector<double>(ensemble.steps + 1,
                                                    std::numeric_limits<double>::quiet_NaN()));
    const double h = ensemble.step_size();
    for (int p = 0; p < ensemble.paths; ++p) {
        double x = problem.x0;
        if (opt.keep_trajectories) out.trajectories[p][0] = x;
        bool alive = true;
        for (int s = 0; s < ensemble.steps; ++s) {
            if (problem.nonnegative_state && x < 0.0) ++out.clamp_count;
            x = advance(x, s * h, ensemble.increment(p, s));
            if (!std::isfinite(x)) {
                out.failed_step[p] = s;
                alive = false;
                break;
            }
            if (opt.keep_trajectories) out.trajectories[p][s + 1] = x;
        }
        if (alive) out.terminal[p] = x;
    }
    return out;
}

}  // namespace detail

inline SchemeResult euler_maruyama(const SdeProblem& problem, const PathEnsemble& ensemble,
                                   const BaselineOptions& opt = {}) {
    detail::validate_baseline_inputs(problem, ensemble);
    const double h = ensemble.step_size();
    if (!opt.predictor_corrector) {
        return detail::run_scheme(problem, ensemble, opt, [&](double x, double t, double dw) {
            return x + problem.drift(x, t) * h + problem.diffusion(x, t) * dw;
        });
    }
    return detail::run_scheme(problem, ensemble, opt, [&](double x, double t, double dw) {
        const double f0 = problem.drift(x, t);
        const double g0 = problem.diffusion(x, t);
        const double predictor = x + f0 * h + g0 * dw;
        const double f1 = problem.drift(predictor, t + h);
        return x + 0.5 * (f0 + f1) * h + g0 * dw;
    });
}

inline SchemeResult milstein(const SdeProblem& problem, const PathEnsemble& ensemble,
                             const std::function<double(double, double)>& gx = nullptr,
                             const BaselineOptions& opt = {}) {
    detail::validate_baseline_inputs(problem, ensemble);
    const double h = ensemble.step_size();
    auto slope = [&](double x, double t) {
        if (gx) return gx(x, t);
        const double step = 1e-6 * std::max(1.0, std::fabs(x));
        return (problem.diffusion(x + step, t) - problem.diffusion(x - step, t)) / (2.0 * step);
    };
    return detail::run_scheme(problem, ensemble, opt, [&](double x, double t, double dw) {
        const double g = problem.diffusion(x, t);
        return x + problem.drift(x, t) * h + g * dw +
               0.5 * g * slope(x, t) * (dw * dw - h);
    });
}

struct McMoments {
    double mean = 0.0;
    double variance = 0.0;
    double stderr_mean = 0.0;
    double stderr_variance = 0.0;
    long long samples = 0;  // finite terminals actually used
};

// Sample moments over the finite terminals.  The variance standard error
// uses the normal-free formula sqrt((m4 - s^4 (n-3)/(n-1)) / n).
inline McMoments mc_moments(const SchemeResult& result) {
    std::vector<double> xs;
    xs.reserve(result.terminal.size());
    for (double v : result.terminal)
        if (std::isfinite(v)) xs.push_back(v);
    if (xs.size() < 2)
        throw std::domain_error("moment estimation needs at least two finite terminal values");
    const auto n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double v : xs) sum += v;
    const double mean = sum / n;
    double s2 = 0.0, s4 = 0.0;
    for (double v : xs) {
        const double d = v - mean;
        s2 += d * d;
        s4 += d * d * d * d;
    }
    McMoments m;
    m.samples = static_cast<long long>(xs.size());
    m.mean = mean;
    m.variance = s2 / (n - 1.0);
    m.stderr_mean = std::sqrt(m.variance / n);
    const double m4 = s4 / n;
    const double var_of_var = (m4 - m.variance * m.variance * (n - 3.0) / (n - 1.0)) / n;
    m.stderr_variance = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
    return m;
}

}  // namespace hermex
