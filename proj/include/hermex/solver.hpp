#pragma once

// Spectral solver for path-independent SDEs.  The solution is expanded in
// space-time Hermite polynomials of the driving Wiener process,
//   X_t ~ X_N(W_t, t) = sum_{n<=N} a_n(t) h_n(W_t, t),
// and the SDE becomes a deterministic ODE system for the coefficients:
//   a_0' = E[F(X_N)],
//   a_n' = (n!/t^n) (E[h_n F(X_N)] + E[h_{n-1} G(X_N)]) - (n/t) a_n.
// The system is singular at t = 0, so integration starts with one Euler
// step built from the first-order proxy X0 + F0 t + G0 W_t, and a two-stage
// Runge-Kutta method carries the grid from t_1 on.  All expectations are
// Gauss-Hermite quadratures in the Wiener variable.

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermex/errors.hpp"
#include "hermex/hermite.hpp"
#include "hermex/quadrature.hpp"
#include "hermex/sde.hpp"

namespace hermex {

enum class Rk2Variant { heun, midpoint };

struct SolverConfig {
    int truncation_order = 8;    // N, highest retained coefficient
    int time_steps = 100;        // M, uniform steps over [0, horizon]
    int quadrature_order = 40;   // Q
    double startup_epsilon = 1e-6;
    Rk2Variant rk2_variant = Rk2Variant::heun;
};

struct CoefficientState {
    double t = 0.0;
    std::vector<double> a;  // a[0..N]
};

struct SolverDiagnostics {
    long long clamp_count = 0;  // negative states fed to a clamping diffusion
};

namespace detail {

inline constexpr double kStiffnessBound = 1e12;

inline void validate_solver_inputs(const SdeProblem& problem, const SolverConfig& cfg) {
    if (!problem.drift || !problem.diffusion)
        throw ConfigError("problem must supply drift and diffusion fields");
    if (!(problem.horizon > 0.0) || !std::isfinite(problem.horizon))
        throw ConfigError("horizon must be positive and finite, got " +
                          std::to_string(problem.horizon));
    if (cfg.truncation_order < 1 || cfg.truncation_order > kMaxHermiteOrder)
        throw ConfigError("truncation order N must lie in [1, " +
                          std::to_string(kMaxHermiteOrder) + "], got " +
                          std::to_string(cfg.truncation_order));
    if (cfg.time_steps < 2)
        throw ConfigError("time_steps M must be >= 2, got " + std::to_string(cfg.time_steps));
    if (cfg.quadrature_order < cfg.truncation_order + 2)
        throw ConfigError("quadrature order Q must be >= N + 2 (got Q=" +
                          std::to_string(cfg.quadrature_order) +
                          ", N=" + std::to_string(cfg.truncation_order) + ")");
    if (cfg.quadrature_order > kMaxQuadratureOrder)
        throw ConfigError("quadrature order Q must be <= " +
                          std::to_string(kMaxQuadratureOrder));
    if (!(cfg.startup_epsilon > 0.0) || !std::isfinite(cfg.startup_epsilon))
        throw ConfigError("startup_epsilon must be positive and finite");
}

// Shared core of the coefficient derivative: expectations of h_n F and
// h_{n-1} G under the current truncated field.
inline void rhs_into(std::vector<double>& out, const CoefficientState& state,
                     const SdeProblem& problem, const SolverConfig& cfg,
                     long long* clamp_count) {
    const int n_max = cfg.truncation_order;
    const double t = state.t;
    const auto& rule = gauss_hermite_rule(cfg.quadrature_order);
    const double scale = std::sqrt(2.0 * t);

    std::vector<double> ef(n_max + 1, 0.0);  // E[h_n F(X_N)]
    std::vector<double> eg(n_max, 0.0);      // E[h_n G(X_N)], n <= N-1
    double row[kMaxHermiteOrder + 1];

    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = scale * rule.nodes[k];
        hermite_row_into(row, n_max, x, t);
        double xn = 0.0;
        for (int n = 0; n <= n_max; ++n) xn += state.a[n] * row[n];
        if (problem.nonnegative_state && xn < 0.0 && clamp_count) ++*clamp_count;

        const double f = problem.drift(xn, t);
        const double g = problem.diffusion(xn, t);
        if (!std::isfinite(f)) throw EvaluationError("drift not finite", xn, t);
        if (!std::isfinite(g)) throw EvaluationError("diffusion not finite", xn, t);

        const double wf = rule.weights[k] * f;
        const double wg = rule.weights[k] * g;
        for (int n = 0; n <= n_max; ++n) ef[n] += wf * row[n];
        for (int n = 0; n < n_max; ++n) eg[n] += wg * row[n];
    }
    for (auto& v : ef) v /= kSqrtPi;
    for (auto& v : eg) v /= kSqrtPi;

    out.resize(n_max + 1);
    out[0] = ef[0];
    for (int n = 1; n <= n_max; ++n) {
        const double factor = factorial(n) * std::pow(t, -n);
        out[n] = factor * (ef[n] + eg[n - 1]) - (n / t) * state.a[n];
    }
    for (int n = 0; n <= n_max; ++n) {
        if (!std::isfinite(out[n]) || std::fabs(out[n]) > kStiffnessBound)
            throw StiffnessError(t, n, out[n]);
    }
}

// First-order proxy used near t = 0, where the true field is unknown.
struct EulerProxy {
    double x0, f0, g0;
    explicit EulerProxy(const SdeProblem& p)
        : x0(p.x0), f0(p.drift(p.x0, 0.0)), g0(p.diffusion(p.x0, 0.0)) {
        if (!std::isfinite(f0) || !std::isfinite(g0))
            throw EvaluationError("drift/diffusion not finite at the initial state", p.x0, 0.0);
    }
    double operator()(double x, double t) const { return x0 + f0 * t + g0 * x; }
};

// (n-1)!/t^{n-1} (E[h_n F(proxy)] + E[h_{n-1} G(proxy)]) at a fixed t; its
// t -> 0 limit is a_n(0).
inline double startup_bracket(int n, double t, const EulerProxy& proxy,
                              const SdeProblem& problem, const SolverConfig& cfg,
                              long long* clamp_count) {
    const auto& rule = gauss_hermite_rule(cfg.quadrature_order);
    const double scale = std::sqrt(2.0 * t);
    double row[kMaxHermiteOrder + 1];
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = scale * rule.nodes[k];
        const double xn = proxy(x, t);
        if (problem.nonnegative_state && xn < 0.0 && clamp_count) ++*clamp_count;
        const double f = problem.drift(xn, t);
        const double g = problem.diffusion(xn, t);
        if (!std::isfinite(f) || !std::isfinite(g))
            throw EvaluationError("drift/diffusion not finite on the startup proxy", xn, t);
        hermite_row_into(row, n, x, t);
        acc += rule.weights[k] * (row[n] * f + row[n - 1] * g);
    }
    return factorial(n - 1) * std::pow(t, -(n - 1)) * acc / kSqrtPi;
}

}  // namespace detail

// Coefficient values at t = 0.  a_0(0) = X0; higher orders are the
// L'Hopital limits of the singular system, estimated by two-point
// Richardson extrapolation in t.  The evaluation point is widened with the
// order: the Gauss-Hermite sum behind the bracket cancels down to
// t^{(n-1)/2}-sized values, so rounding noise grows like
// eps * t^{-(n-1)/2} and a fixed epsilon turns orders n >= 5 into noise.
// 4*eps^{2/(n+3)} balances that against the O(t^2) extrapolation bias;
// the constant buys an extra noise decade that the bias budget can afford.
inline std::vector<double> initial_coefficients(const SdeProblem& problem,
                                                const SolverConfig& cfg,
                                                long long* clamp_count = nullptr) {
    detail::validate_solver_inputs(problem, cfg);
    const detail::EulerProxy proxy(problem);
    std::vector<double> a(cfg.truncation_order + 1);
    a[0] = problem.x0;
    for (int n = 1; n <= cfg.truncation_order; ++n) {
        const double eps_n =
            std::max(cfg.startup_epsilon, 4.0 * std::pow(DBL_EPSILON, 2.0 / (n + 3)));
        const double b1 = detail::startup_bracket(n, eps_n, proxy, problem, cfg, clamp_count);
        const double b2 = detail::startup_bracket(n, eps_n / 2, proxy, problem, cfg, clamp_count);
        a[n] = 2.0 * b2 - b1;
        if (!std::isfinite(a[n]))
            throw StartupError("initial coefficient limit is not finite", n);
    }
    return a;
}

// One Euler step across the t = 0 singularity: solving the backward-Euler
// form of the coefficient ODE at t_1 = h for a_n(h) gives
//   a_n(h) = [ (n!/h^{n-1}) (E[h_n F] + E[h_{n-1} G]) + a_n(0) ] / (n+1),
// with expectations taken on the first-order proxy.
inline CoefficientState startup_step(const SdeProblem& problem, const SolverConfig& cfg,
                                     const std::vector<double>& initial,
                                     long long* clamp_count = nullptr) {
    detail::validate_solver_inputs(problem, cfg);
    if (initial.size() != static_cast<std::size_t>(cfg.truncation_order) + 1)
        throw ConfigError("initial coefficient vector has wrong length");

    const double h = problem.horizon / cfg.time_steps;
    const detail::EulerProxy proxy(problem);

    CoefficientState state;
    state.t = h;
    state.a.resize(initial.size());
    state.a[0] =
        initial[0] + h * expect([&](double x) { return problem.drift(proxy(x, h), h); }, h,
                                gauss_hermite_rule(cfg.quadrature_order));
    for (int n = 1; n <= cfg.truncation_order; ++n) {
        const double bracket =
            detail::startup_bracket(n, h, proxy, problem, cfg, clamp_count);
        // bracket carries (n-1)!/h^{n-1}; one more factor n gives n!/h^{n-1}
        state.a[n] = (n * bracket + initial[n]) / (n + 1);
        if (!std::isfinite(state.a[n]))
            throw StartupError("startup coefficient is not finite", n);
    }
    return state;
}

// Time derivative of the coefficient vector at state.t > 0.
inline std::vector<double> coefficient_rhs(const CoefficientState& state,
                                           const SdeProblem& problem,
                                           const SolverConfig& cfg) {
    detail::validate_solver_inputs(problem, cfg);
    if (!(state.t > 0.0))
        throw std::domain_error("coefficient system is singular at t <= 0");
    if (state.a.size() != static_cast<std::size_t>(cfg.truncation_order) + 1)
        throw ConfigError("state coefficient vector has wrong length");
    std::vector<double> out;
    detail::rhs_into(out, state, problem, cfg, nullptr);
    return out;
}

// Solved coefficient trajectory on the uniform grid t_i = i h.
class ExpansionSolution {
public:
    ExpansionSolution(SdeProblem problem, SolverConfig cfg,
                      std::vector<CoefficientState> grid, SolverDiagnostics diag)
        : problem_(std::move(problem)), cfg_(cfg), grid_(std::move(grid)), diag_(diag) {}

    const std::vector<CoefficientState>& grid() const { return grid_; }
    const SdeProblem& problem() const { return problem_; }
    const SolverConfig& config() const { return cfg_; }
    const SolverDiagnostics& diagnostics() const { return diag_; }
    double time_step() const { return problem_.horizon / cfg_.time_steps; }

    // X_N(x, t_i): the truncated field at grid node i, evaluated at Wiener
    // coordinate x.
    double evaluate(double x, int i) const {
        const auto& s = at(i);
        double row[detail::kMaxHermiteOrder + 1];
        detail::hermite_row_into(row, cfg_.truncation_order, x, s.t);
        double acc = 0.0;
        for (int n = 0; n <= cfg_.truncation_order; ++n) acc += s.a[n] * row[n];
        return acc;
    }

    struct Moments {
        double mean = 0.0;
        double second = 0.0;
        double variance = 0.0;
    };

    // Mean and second moment fall out of the coefficients by orthogonality:
    // E[X_N] = a_0 and E[X_N^2] = sum t^n/n! a_n^2 (Parseval).  The
    // variance is the n >= 1 tail of that sum, so no cancellation occurs.
    Moments moments(int i) const {
        const auto& s = at(i);
        Moments m;
        m.mean = s.a[0];
        double tail = 0.0;
        double tn = 1.0;
        for (int n = 1; n <= cfg_.truncation_order; ++n) {
            tn *= s.t / n;
            tail += tn * s.a[n] * s.a[n];
        }
        m.variance = tail;
        m.second = s.a[0] * s.a[0] + tail;
        return m;
    }

    // Raw k-th moment E[X_N^k] by quadrature, k in {3, 4}; needs t_i > 0.
    double higher_moment(int i, int k) const {
        if (k != 3 && k != 4)
            throw std::domain_error("higher_moment supports k in {3, 4}, got " +
                                    std::to_string(k));
        return raw_moment(i, k);
    }

    // Unrestricted power moment; used internally for transformed models.
    double raw_moment(int i, int k) const {
        if (k < 1) throw std::domain_error("moment order must be >= 1");
        const auto& s = at(i);
        if (!(s.t > 0.0))
            throw std::domain_error("power moments by quadrature need t > 0");
        const int min_order = (k * cfg_.truncation_order + 2 + 1) / 2;
        const auto& rule =
            gauss_hermite_rule(std::max(cfg_.quadrature_order, min_order));
        return expect([&](double x) { return std::pow(evaluate(x, i), k); }, s.t, rule);
    }

private:
    const CoefficientState& at(int i) const {
        if (i < 0 || i >= static_cast<int>(grid_.size()))
            throw std::out_of_range("grid index " + std::to_string(i) + " outside [0, " +
                                    std::to_string(grid_.size() - 1) + "]");
        return grid_[static_cast<std::size_t>(i)];
    }

    SdeProblem problem_;
    SolverConfig cfg_;
    std::vector<CoefficientState> grid_;
    SolverDiagnostics diag_;
};

// Full solve: initial limits, one Euler startup step, then RK2 on [h, T].
inline ExpansionSolution integrate(const SdeProblem& problem, const SolverConfig& cfg) {
    detail::validate_solver_inputs(problem, cfg);
    const int m = cfg.time_steps;
    const double h = problem.horizon / m;

    SolverDiagnostics diag;
    std::vector<CoefficientState> grid;
    grid.reserve(m + 1);
    grid.push_back({0.0, initial_coefficients(problem, cfg, &diag.clamp_count)});
    grid.push_back(startup_step(problem, cfg, grid[0].a, &diag.clamp_count));

    std::vector<double> k1, k2;
    CoefficientState stage;
    for (int i = 1; i < m; ++i) {
        const CoefficientState& cur = grid.back();
        detail::rhs_into(k1, cur, problem, cfg, &diag.clamp_count);

        CoefficientState next;
        next.t = (i + 1 == m) ? problem.horizon : (i + 1) * h;
        next.a.resize(cur.a.size());
        if (cfg.rk2_variant == Rk2Variant::heun) {
            stage.t = next.t;
            stage.a.resize(cur.a.size());
            for (std::size_t n = 0; n < cur.a.size(); ++n)
                stage.a[n] = cur.a[n] + h * k1[n];
            detail::rhs_into(k2, stage, problem, cfg, &diag.clamp_count);
            for (std::size_t n = 0; n < cur.a.size(); ++n)
                next.a[n] = cur.a[n] + 0.5 * h * (k1[n] + k2[n]);
        } else {
            stage.t = cur.t + 0.5 * h;
            stage.a.resize(cur.a.size());
            for (std::size_t n = 0; n < cur.a.size(); ++n)
                stage.a[n] = cur.a[n] + 0.5 * h * k1[n];
            detail::rhs_into(k2, stage, problem, cfg, &diag.clamp_count);
            for (std::size_t n = 0; n < cur.a.size(); ++n)
                next.a[n] = cur.a[n] + h * k2[n];
        }
        grid.push_back(std::move(next));
    }
    return ExpansionSolution(problem, cfg, std::move(grid), diag);
}

}  // namespace hermex
