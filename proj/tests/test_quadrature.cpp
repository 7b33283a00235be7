#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hermex/quadrature.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using hermex::build_rule;
using hermex::expect;
using hermex::gauss_hermite_rule;
using hermex::HermiteEval;
using hermex::project_coefficient;

namespace {
const double kSqrtPi = std::sqrt(std::acos(-1.0));
}

TEST_CASE("quadrature rule construction at small orders") {
    auto r1 = build_rule(1);
    REQUIRE(r1.nodes.size() == 1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK_THAT(r1.weights[0], WithinRel(kSqrtPi, 1e-14));

    // Two-point oracle by moment matching against exp(-u^2): symmetric nodes
    // +/- a with equal weights w require 2w = m_0 and 2w a^2 = m_2.
    const double w = oracle::hermite_weight_moment(0) / 2.0;
    const double a = std::sqrt(oracle::hermite_weight_moment(2) / oracle::hermite_weight_moment(0));
    auto r2 = build_rule(2);
    CHECK_THAT(r2.nodes[0], WithinRel(-a, 1e-13));
    CHECK_THAT(r2.nodes[1], WithinRel(a, 1e-13));
    CHECK_THAT(r2.weights[0], WithinRel(w, 1e-13));
    CHECK_THAT(r2.weights[1], WithinRel(w, 1e-13));

    auto r5 = build_rule(5);
    double quartic = 0.0;
    for (int k = 0; k < 5; ++k) quartic += r5.weights[k] * std::pow(r5.nodes[k], 4);
    CHECK_THAT(quartic, WithinRel(oracle::hermite_weight_moment(4), 1e-13));
}

TEST_CASE("quadrature rule structure across orders") {
    for (int q : {1, 2, 3, 4, 5, 6, 7, 8, 20, 40, 96, 200}) {
        auto r = build_rule(q);
        REQUIRE(static_cast<int>(r.nodes.size()) == q);
        double wsum = 0.0;
        for (int i = 0; i < q; ++i) {
            CHECK(r.weights[i] > 0.0);
            if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
            CHECK(r.nodes[i] == -r.nodes[q - 1 - i]);      // symmetry is exact
            CHECK(r.weights[i] == r.weights[q - 1 - i]);
            wsum += r.weights[i];
        }
        CHECK_THAT(wsum, WithinRel(kSqrtPi, 1e-12));
    }
}

TEST_CASE("quadrature monomial exactness up to degree 2Q-1") {
    for (int q : {2, 4, 6, 8, 12}) {
        auto r = build_rule(q);
        for (int j = 0; j <= 2 * q - 1; ++j) {
            double s = 0.0;
            for (int k = 0; k < q; ++k) s += r.weights[k] * std::pow(r.nodes[k], j);
            const double ref = oracle::hermite_weight_moment(j);
            // exact up to rounding in a sum whose L1 mass is Gamma((j+1)/2)
            const double tol =
                1e-10 * std::max(1.0, std::fabs(ref)) + 1e-12 * oracle::hermite_weight_abs_moment(j);
            CHECK(std::fabs(s - ref) <= tol);
        }
    }
}

TEST_CASE("quadrature rule order validation and caching") {
    CHECK_THROWS_AS(build_rule(0), hermex::ConfigError);
    CHECK_THROWS_AS(build_rule(-3), hermex::ConfigError);
    CHECK_THROWS_AS(build_rule(201), hermex::ConfigError);
    const auto& a = gauss_hermite_rule(40);
    const auto& b = gauss_hermite_rule(40);
    CHECK(&a == &b);
}

TEST_CASE("quadrature expectations at pinned values") {
    const auto& rule = gauss_hermite_rule(40);
    HermiteEval h;

    CHECK_THAT(expect([](double x) { return x * x; }, 0.5, rule), WithinAbs(0.5, 1e-12));
    CHECK_THAT(expect([&](double x) {
                   const double v = h.value(2, x, 1.0);
                   return v * v;
               }, 1.0, rule),
               WithinAbs(0.5, 1e-10));
    CHECK(std::fabs(expect([](double x) { return x * x * x; }, 2.0, rule)) <= 1e-13);
    CHECK(std::fabs(expect([&](double x) { return h.value(1, x, 0.7); }, 0.7, rule)) <= 1e-14);

    CHECK_THROWS_AS(expect([](double x) { return x; }, 0.0, rule), std::domain_error);
    CHECK_THROWS_AS(expect([](double x) { return x; }, -1.0, rule), std::domain_error);
    // Odd-order rules contain the node x = 0, so 1/x trips the finiteness guard.
    CHECK_THROWS_AS(expect([](double x) { return 1.0 / x; }, 1.0, gauss_hermite_rule(5)),
                    hermex::EvaluationError);
}

TEST_CASE("quadrature orthogonality of the hermite family") {
    HermiteEval h;
    for (int q : {10, 40}) {
        const auto& rule = gauss_hermite_rule(q);
        for (double t : {0.1, 0.5, 1.0, 2.0}) {
            for (int m = 0; m <= 8; ++m) {
                for (int n = 0; n <= 8; ++n) {
                    const double got = expect(
                        [&](double x) { return h.value(m, x, t) * h.value(n, x, t); }, t, rule);
                    const double ref =
                        m == n ? std::pow(t, n) / hermex::detail::factorial(n) : 0.0;
                    CHECK(std::fabs(got - ref) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("quadrature random polynomial expectations match closed-form moments") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uc(-1.0, 1.0);
    for (int q : {5, 10}) {
        const auto& rule = gauss_hermite_rule(q);
        for (double t : {0.3, 1.0, 2.0}) {
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<double> coeff(2 * q);  // degree 2Q-1
                for (auto& c : coeff) c = uc(rng);
                const double got = expect(
                    [&](double x) {
                        double acc = 0.0;
                        for (int j = static_cast<int>(coeff.size()) - 1; j >= 0; --j)
                            acc = acc * x + coeff[j];
                        return acc;
                    },
                    t, rule);
                double ref = 0.0;
                double mass = 0.0;
                for (std::size_t j = 0; j < coeff.size(); ++j) {
                    ref += coeff[j] * oracle::gaussian_moment(static_cast<int>(j), t);
                    mass += std::fabs(coeff[j]) * oracle::gaussian_abs_moment(static_cast<int>(j), t);
                }
                CHECK(std::fabs(got - ref) <= 1e-10 * std::max(1.0, std::fabs(ref)) + 1e-12 * mass);
            }
        }
    }
}

TEST_CASE("quadrature coefficient projection at pinned values") {
    const auto& rule = gauss_hermite_rule(40);
    CHECK_THAT(project_coefficient(1, [](double x, double) { return x; }, 0.25, rule),
               WithinRel(1.0, 1e-12));
    // Lognormal field exp(x/2 - t/8) carries coefficients (1/2)^n.
    CHECK_THAT(project_coefficient(
                   2, [](double x, double t) { return std::exp(0.5 * x - 0.125 * t); }, 1.0, rule),
               WithinAbs(0.25, 1e-10));
    CHECK_THAT(project_coefficient(0, [](double x, double) { return x * x; }, 2.0, rule),
               WithinRel(2.0, 1e-12));
    CHECK_THROWS_AS(project_coefficient(1, [](double x, double) { return x; }, 0.0, rule),
                    std::domain_error);
    CHECK_THROWS_AS(project_coefficient(-1, [](double x, double) { return x; }, 1.0, rule),
                    std::domain_error);
}

TEST_CASE("quadrature projection round-trips expansion coefficients") {
    constexpr int N = 8;
    HermiteEval h(N);
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> uc(-1.0, 1.0);

    for (int q : {N + 2, 40}) {
        const auto& rule = gauss_hermite_rule(q);
        for (double t : {0.25, 1.0, 2.0}) {
            for (int trial = 0; trial < 10; ++trial) {
                std::vector<double> a(N + 1);
                for (auto& c : a) c = uc(rng);
                auto field = [&](double x, double tt) {
                    auto row = h.row(N, x, tt);
                    double acc = 0.0;
                    for (int n = 0; n <= N; ++n) acc += a[n] * row[n];
                    return acc;
                };
                for (int n = 0; n <= N; ++n)
                    CHECK(std::fabs(project_coefficient(n, field, t, rule) - a[n]) <= 1e-10);
            }
        }
    }
}
