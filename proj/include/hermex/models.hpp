#pragma once

// Built-in SDE models with exact solution surfaces phi(t, w) where known,
// and the path-independence condition checker.  A problem has a
// path-independent solution X_t = phi(t, W_t) exactly when
//   R = G F_x - F G_x - G_t - (G^2/2) G_xx = 0,
// equivalently phi_w = G(phi) and phi_t + phi_ww/2 = F(phi).

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hermex/errors.hpp"
#include "hermex/sde.hpp"
#include "hermex/time_function.hpp"

namespace hermex {

// Ito-transformed twin of a model: the solver runs on `problem` in U-space
// and `to_x` maps results back to the original state.
struct CompanionSpec {
    SdeProblem problem;
    std::function<double(double, double)> exact;  // phi_U(t, w)
    std::function<double(double)> to_x;
};

struct ModelSpec {
    std::string name;
    SdeProblem problem;
    std::function<double(double, double)> exact;         // phi(t, w), null if unknown
    std::function<double(double, double)> diffusion_dx;  // analytic G_x, null -> FD
    std::optional<CompanionSpec> companion;
    double probe_x_lo = -1.0;  // rectangle for the independence checker
    double probe_x_hi = 1.0;
    double probe_t_lo = 0.1;
    double probe_t_hi = 2.0;
};

// dX = mu(t) X dt + sigma X dW; phi = X0 exp(sigma w + int mu - sigma^2 t / 2).
inline ModelSpec gbm(const TimeFunction& mu, double sigma, double x0) {
    ModelSpec m;
    m.name = "gbm";
    m.problem.drift = [mu](double x, double t) { return mu(t) * x; };
    m.problem.diffusion = [sigma](double x, double) { return sigma * x; };
    m.problem.x0 = x0;
    m.problem.horizon = 1.0;
    m.exact = [mu, sigma, x0](double t, double w) {
        return x0 * std::exp(sigma * w + mu.integral(t) - 0.5 * sigma * sigma * t);
    };
    m.diffusion_dx = [sigma](double, double) { return sigma; };
    m.probe_x_lo = 0.2;
    m.probe_x_hi = 3.0;
    return m;
}

// Square-root diffusion with deterministic scale sigma_t (sigma_t(0) = 1):
//   dX = (2 K sigma'/sigma X + s^2 sigma^{2K}) dt + 2 s sigma^K sqrt(X) dW.
// U = sqrt(X) is the Langevin process dU = (K sigma'/sigma) U dt + s sigma^K dW
// with U = sigma^K (sqrt(X0) + s w), so phi = sigma^{2K} (sqrt(X0) + s w)^2.
inline ModelSpec cir_special(double K, const TimeFunction& sigma_t, double x0,
                             double scale = 1.0) {
    if (std::fabs(sigma_t(0.0) - 1.0) > 1e-12)
        throw ConfigError("cir_special requires the time scale normalized to 1 at t = 0");
    if (!(x0 > 0.0)) throw ConfigError("cir_special requires a positive initial state");
    if (!(scale > 0.0)) throw ConfigError("cir_special requires a positive diffusion scale");
    const double s = scale;
    auto ratio = [K, sigma_t](double t) {
        return K * sigma_t.derivative(t) / sigma_t(t);
    };
    auto sig_k = [K, sigma_t](double t) { return std::pow(sigma_t(t), K); };

    ModelSpec m;
    m.name = "cir_special";
    m.problem.drift = [ratio, sig_k, s](double x, double t) {
        const double sk = sig_k(t);
        return 2.0 * ratio(t) * x + s * s * sk * sk;
    };
    m.problem.diffusion = [sig_k, s](double x, double t) {
        return 2.0 * s * sig_k(t) * std::sqrt(std::max(x, 0.0));
    };
    m.problem.x0 = x0;
    m.problem.horizon = 1.0;
    m.problem.nonnegative_state = true;
    m.exact = [sig_k, s, x0](double t, double w) {
        const double u = sig_k(t) * (std::sqrt(x0) + s * w);
        return u * u;
    };
    m.companion.emplace();
    m.companion->problem.drift = [ratio](double u, double t) { return ratio(t) * u; };
    m.companion->problem.diffusion = [sig_k, s](double, double t) { return s * sig_k(t); };
    m.companion->problem.x0 = std::sqrt(x0);
    m.companion->problem.horizon = 1.0;
    m.companion->exact = [sig_k, s, x0](double t, double w) {
        return sig_k(t) * (std::sqrt(x0) + s * w);
    };
    m.companion->to_x = [](double u) { return u * u; };
    m.probe_x_lo = 0.25;
    m.probe_x_hi = 4.0;
    return m;
}

// Concrete growth instance dX = (X/(t+1) + (t+1)/16) dt + sqrt((t+1) X)/2 dW,
// X0 = 1, carried as raw fields with the derived surface (t+1)(1 + w/4)^2.
inline ModelSpec cir_growth() {
    ModelSpec m;
    m.name = "cir_growth";
    m.problem.drift = [](double x, double t) { return x / (t + 1.0) + (t + 1.0) / 16.0; };
    m.problem.diffusion = [](double x, double t) {
        return std::sqrt((t + 1.0) * std::max(x, 0.0)) / 2.0;
    };
    m.problem.x0 = 1.0;
    m.problem.horizon = 2.0;
    m.problem.nonnegative_state = true;
    m.exact = [](double t, double w) {
        const double u = 1.0 + 0.25 * w;
        return (t + 1.0) * u * u;
    };
    m.companion.emplace();
    m.companion->problem.drift = [](double u, double t) { return u / (2.0 * (t + 1.0)); };
    m.companion->problem.diffusion = [](double, double t) {
        return std::sqrt(t + 1.0) / 4.0;
    };
    m.companion->problem.x0 = 1.0;
    m.companion->problem.horizon = 2.0;
    m.companion->exact = [](double t, double w) {
        return std::sqrt(t + 1.0) * (1.0 + 0.25 * w);
    };
    m.companion->to_x = [](double u) { return u * u; };
    m.probe_x_lo = 0.25;
    m.probe_x_hi = 4.0;
    return m;
}

// dX = -a^2 sin(X) cos^3(X) dt + a cos^2(X) dW; phi = arctan(a w + tan X0).
inline ModelSpec arctan_model(double a, double x0) {
    if (!(std::fabs(x0) < std::acos(-1.0) / 2.0))
        throw ConfigError("arctan model needs |x0| < pi/2");
    ModelSpec m;
    m.name = "arctan";
    m.problem.drift = [a](double x, double) {
        const double c = std::cos(x);
        return -a * a * std::sin(x) * c * c * c;
    };
    m.problem.diffusion = [a](double x, double) {
        const double c = std::cos(x);
        return a * c * c;
    };
    m.problem.x0 = x0;
    m.problem.horizon = 1.0;
    m.exact = [a, x0](double t, double w) {
        (void)t;
        return std::atan(a * w + std::tan(x0));
    };
    m.diffusion_dx = [a](double x, double) { return -a * std::sin(2.0 * x); };
    m.probe_x_lo = -1.2;
    m.probe_x_hi = 1.2;
    return m;
}

// dX = X dt + t dW: fails the path-independence condition (R = t - 1).
inline ModelSpec counterexample() {
    ModelSpec m;
    m.name = "counterexample";
    m.problem.drift = [](double x, double) { return x; };
    m.problem.diffusion = [](double, double t) { return t; };
    m.problem.x0 = 0.0;
    m.problem.horizon = 2.0;
    m.probe_x_lo = -1.0;
    m.probe_x_hi = 1.0;
    return m;
}

inline std::vector<std::string> model_names() {
    return {"gbm", "cir_special", "cir_growth", "arctan", "counterexample"};
}

struct ResidualPoint {
    double x = 0.0;
    double t = 0.0;
    double residual = 0.0;  // raw R value
    bool evaluable = true;
    bool within_tolerance = false;
};

struct IndependenceReport {
    std::vector<ResidualPoint> points;
    double max_residual = 0.0;  // |R| at the worst evaluable point
    double max_x = 0.0;
    double max_t = 0.0;
    int evaluation_failures = 0;
    bool verdict = false;  // every evaluable point within tolerance
};

inline constexpr double kIndependenceTolerance = 1e-4;

// Probes R = G F_x - F G_x - G_t - (G^2/2) G_xx by central differences on
// the grid; a point passes when |R| <= tol (1 + |F| + |G|).
inline IndependenceReport check_path_independence(const SdeProblem& problem,
                                                  const std::vector<double>& xs,
                                                  const std::vector<double>& ts) {
    if (!problem.drift || !problem.diffusion)
        throw ConfigError("problem must provide drift and diffusion fields");
    if (xs.empty() || ts.empty()) throw ConfigError("probe grid is empty");
    const auto& F = problem.drift;
    const auto& G = problem.diffusion;
    IndependenceReport report;
    for (double t : ts) {
        for (double x : xs) {
            ResidualPoint pt;
            pt.x = x;
            pt.t = t;
            const double hx = 1e-5 * std::max(1.0, std::fabs(x));
            const double ht = 1e-5 * std::max(1.0, t);
            const double f = F(x, t);
            const double g = G(x, t);
            const double fx = (F(x + hx, t) - F(x - hx, t)) / (2.0 * hx);
            const double gx = (G(x + hx, t) - G(x - hx, t)) / (2.0 * hx);
            const double gxx = (G(x + hx, t) - 2.0 * g + G(x - hx, t)) / (hx * hx);
            const double gt = (G(x, t + ht) - G(x, t - ht)) / (2.0 * ht);
            const double r = g * fx - f * gx - gt - 0.5 * g * g * gxx;
            if (!std::isfinite(r)) {
                pt.evaluable = false;
                ++report.evaluation_failures;
            } else {
                pt.residual = r;
                pt.within_tolerance =
                    std::fabs(r) <=
                    kIndependenceTolerance * (1.0 + std::fabs(f) + std::fabs(g));
                if (std::fabs(r) >= report.max_residual) {
                    report.max_residual = std::fabs(r);
                    report.max_x = x;
                    report.max_t = t;
                }
            }
            report.points.push_back(pt);
        }
    }
    bool all_ok = report.evaluation_failures < static_cast<int>(report.points.size());
    for (const auto& pt : report.points)
        if (pt.evaluable && !pt.within_tolerance) all_ok = false;
    report.verdict = all_ok;
    return report;
}

inline std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 2 || !(hi > lo)) throw ConfigError("grid needs at least two ascending points");
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    return g;
}

inline IndependenceReport check_path_independence(const ModelSpec& model, int points = 21) {
    return check_path_independence(model.problem,
                                   linear_grid(model.probe_x_lo, model.probe_x_hi, points),
                                   linear_grid(model.probe_t_lo, model.probe_t_hi, points));
}

}  // namespace hermex
