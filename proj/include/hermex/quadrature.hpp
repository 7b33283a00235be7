#pragma once

// Gauss-Hermite quadrature for expectations against the law of W_t.  Nodes
// and weights target the weight exp(-u^2); the substitution x = sqrt(2t) u
// with a 1/sqrt(pi) normalization turns them into E[f(W_t)].  A rule of
// order Q integrates polynomials of degree <= 2Q-1 exactly, which is what
// all orthogonality and projection identities below lean on.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hermex/errors.hpp"
#include "hermex/hermite.hpp"

namespace hermex {

struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;    // ascending, exactly symmetric about 0
    std::vector<double> weights;  // positive, sum sqrt(pi)
};

namespace detail {
inline constexpr int kMaxQuadratureOrder = 200;
inline const double kSqrtPi = std::sqrt(std::acos(-1.0));
}  // namespace detail

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix with off-diagonal sqrt(k/2); weights come from the first component
// of each eigenvector.  Symmetry is then enforced exactly by averaging the
// +/- pairs so that odd integrands cancel to the last bit.
inline QuadratureRule build_rule(int order) {
    if (order < 1 || order > detail::kMaxQuadratureOrder)
        throw ConfigError("quadrature order must lie in [1, " +
                          std::to_string(detail::kMaxQuadratureOrder) + "], got " +
                          std::to_string(order));

    QuadratureRule rule;
    rule.order = order;
    if (order == 1) {
        rule.nodes = {0.0};
        rule.weights = {detail::kSqrtPi};
        return rule;
    }

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = detail::kSqrtPi * v0 * v0;
    }
    for (int i = 0; i < order / 2; ++i) {
        const int j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

// Rules are immutable once built; repeated callers share one instance.
inline const QuadratureRule& gauss_hermite_rule(int order) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, std::make_unique<const QuadratureRule>(build_rule(order))).first;
    return *it->second;
}

namespace detail {
inline void check_positive_time(double t, const char* where) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::domain_error(std::string(where) + " requires t > 0, got " + std::to_string(t));
}
}  // namespace detail

// E[f(W_t)] for W_t ~ N(0, t).
template <class F>
double expect(F&& f, double t, const QuadratureRule& rule) {
    detail::check_positive_time(t, "expect");
    const double scale = std::sqrt(2.0 * t);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = scale * rule.nodes[k];
        const double v = f(x);
        if (!std::isfinite(v)) throw EvaluationError("integrand not finite", x, t);
        acc += rule.weights[k] * v;
    }
    return acc / detail::kSqrtPi;
}

// n-th expansion coefficient of the field X at time t:
//   a_n = (n!/t^n) E[X(W_t, t) h_n(W_t, t)],
// the normalization coming from E[h_n h_m] = delta t^n/n!.
template <class Field>
double project_coefficient(int n, Field&& X, double t, const QuadratureRule& rule) {
    detail::check_positive_time(t, "project_coefficient");
    if (n < 0 || n > detail::kMaxHermiteOrder)
        throw std::domain_error("projection order " + std::to_string(n) + " outside [0, " +
                                std::to_string(detail::kMaxHermiteOrder) + "]");

    const double scale = std::sqrt(2.0 * t);
    double row[detail::kMaxHermiteOrder + 1];
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = scale * rule.nodes[k];
        const double v = X(x, t);
        if (!std::isfinite(v)) throw EvaluationError("projected field not finite", x, t);
        detail::hermite_row_into(row, n, x, t);
        acc += rule.weights[k] * v * row[n];
    }
    return detail::factorial(n) * std::pow(t, -n) * acc / detail::kSqrtPi;
}

}  // namespace hermex
