#pragma once

// Space-time Hermite polynomials h_n(x, t), the building blocks of the
// expansion: h_0 = 1 and (n+1) h_{n+1} = x h_n - t h_{n-1}.  They satisfy
// the backward heat equation d_t h_n = -1/2 d_xx h_n, the ladder identity
// d_x h_{n+1} = h_n, and reduce to x^n/n! at t = 0.  Under the Gaussian
// weight of variance t they are orthogonal with E[h_n h_m] = delta t^n/n!,
// which is what makes them an L2 basis in the Wiener variable.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermex/errors.hpp"

namespace hermex {

namespace detail {

// Orders beyond ~40 are useless in double precision (factorial scaling and
// startup conditioning degrade long before), so the table is small.
inline constexpr int kMaxHermiteOrder = 40;

inline const double* factorial_table() {
    static const auto table = [] {
        static double f[kMaxHermiteOrder + 2];
        f[0] = 1.0;
        for (int n = 1; n <= kMaxHermiteOrder + 1; ++n) f[n] = f[n - 1] * static_cast<double>(n);
        return f;
    }();
    return table;
}

inline double factorial(int n) { return factorial_table()[n]; }

// Fills out[0..n] with h_0 .. h_n at (x, t) by the upward recursion.
// The same recursion covers t = 0, where it degenerates to x^n/n!.
inline void hermite_row_into(double* out, int n, double x, double t) {
    out[0] = 1.0;
    if (n == 0) return;
    out[1] = x;
    for (int k = 1; k < n; ++k)
        out[k + 1] = (x * out[k] - t * out[k - 1]) / static_cast<double>(k + 1);
}

}  // namespace detail

// Evaluator with a fixed order budget.  Stateless apart from the budget;
// safe to share across threads.
class HermiteEval {
public:
    explicit HermiteEval(int max_order = 32) : max_order_(max_order) {
        if (max_order < 0 || max_order > detail::kMaxHermiteOrder)
            throw ConfigError("hermite max_order must lie in [0, " +
                              std::to_string(detail::kMaxHermiteOrder) + "], got " +
                              std::to_string(max_order));
    }

    int max_order() const { return max_order_; }

    // h_n(x, t).  Requires 0 <= n <= max_order and t >= 0.
    double value(int n, double x, double t) const {
        check_args(n, t);
        double row[detail::kMaxHermiteOrder + 1];
        detail::hermite_row_into(row, n, x, t);
        return row[n];
    }

    // [h_0, ..., h_n] at (x, t); one recursion pass, no repeated work.
    std::vector<double> row(int n, double x, double t) const {
        check_args(n, t);
        std::vector<double> out(static_cast<std::size_t>(n) + 1);
        detail::hermite_row_into(out.data(), n, x, t);
        return out;
    }

    // sum_{n=0..N} lambda^n h_n(x, t), the truncated generating function;
    // converges to exp(lambda x - lambda^2 t / 2).
    double generating_partial_sum(double lambda, double x, double t, int n) const {
        check_args(n, t);
        double row[detail::kMaxHermiteOrder + 1];
        detail::hermite_row_into(row, n, x, t);
        double sum = 0.0;
        double pow_lambda = 1.0;
        for (int k = 0; k <= n; ++k) {
            sum += pow_lambda * row[k];
            pow_lambda *= lambda;
        }
        return sum;
    }

private:
    void check_args(int n, double t) const {
        if (n < 0 || n > max_order_)
            throw std::domain_error("hermite order " + std::to_string(n) +
                                    " outside [0, " + std::to_string(max_order_) + "]");
        if (t < 0.0 || !std::isfinite(t))
            throw std::domain_error("hermite time argument must be finite and >= 0, got " +
                                    std::to_string(t));
    }

    int max_order_;
};

}  // namespace hermex
