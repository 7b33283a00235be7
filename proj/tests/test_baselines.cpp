#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hermex/baselines.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using hermex::BaselineOptions;
using hermex::PathEnsemble;
using hermex::SdeProblem;

namespace {

SdeProblem lognormal(double mu, double sigma, double x0, double horizon) {
    SdeProblem p;
    p.drift = [mu](double x, double) { return mu * x; };
    p.diffusion = [sigma](double x, double) { return sigma * x; };
    p.x0 = x0;
    p.horizon = horizon;
    return p;
}

SdeProblem plain(double f, double g, double x0, double horizon) {
    SdeProblem p;
    p.drift = [f](double, double) { return f; };
    p.diffusion = [g](double, double) { return g; };
    p.x0 = x0;
    p.horizon = horizon;
    return p;
}

}  // namespace

TEST_CASE("baselines path ensembles are deterministic") {
    auto a = hermex::generate_paths(42, 1, 10, 1.0);
    auto b = hermex::generate_paths(42, 1, 10, 1.0);
    REQUIRE(a.increments.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(a.increments[i] == b.increments[i]);

    auto c = hermex::generate_paths(43, 1, 10, 1.0);
    int differing = 0;
    for (std::size_t i = 0; i < 10; ++i) differing += (a.increments[i] != c.increments[i]);
    CHECK(differing == 10);
}

TEST_CASE("baselines increments have the Brownian distribution") {
    const int paths = 100000, steps = 10;
    auto e = hermex::generate_paths(42, paths, steps, 1.0);
    const double h = e.step_size();
    CHECK_THAT(h, WithinRel(0.1, 1e-15));

    // step-0 column: variance within 3 standard errors of h
    double mean = 0.0;
    for (int p = 0; p < paths; ++p) mean += e.increment(p, 0);
    mean /= paths;
    double var = 0.0;
    for (int p = 0; p < paths; ++p) {
        const double d = e.increment(p, 0) - mean;
        var += d * d;
    }
    var /= (paths - 1);
    const double se_var = h * std::sqrt(2.0 / (paths - 1));
    CHECK(std::fabs(var - h) <= 3.0 * se_var);
    CHECK(std::fabs(mean) <= 3.0 * std::sqrt(h / paths));

    // (7, 2, 1, T): two draws per seed, uncorrelated across the path index
    const int reps = 2000;
    std::vector<double> z1, z2;
    for (int s = 0; s < reps; ++s) {
        auto two = hermex::generate_paths(static_cast<std::uint64_t>(s), 2, 1, 1.0);
        z1.push_back(two.increment(0, 0));
        z2.push_back(two.increment(1, 0));
    }
    double m1 = 0.0, m2 = 0.0;
    for (int s = 0; s < reps; ++s) {
        m1 += z1[s];
        m2 += z2[s];
    }
    m1 /= reps;
    m2 /= reps;
    double cov = 0.0, v1 = 0.0, v2 = 0.0;
    for (int s = 0; s < reps; ++s) {
        cov += (z1[s] - m1) * (z2[s] - m2);
        v1 += (z1[s] - m1) * (z1[s] - m1);
        v2 += (z2[s] - m2) * (z2[s] - m2);
    }
    const double corr = cov / std::sqrt(v1 * v2);
    CHECK(std::fabs(corr) <= 4.0 / std::sqrt(static_cast<double>(reps)));
    CHECK_THAT(v1 / (reps - 1), WithinAbs(1.0, 0.1));
    CHECK_THAT(v2 / (reps - 1), WithinAbs(1.0, 0.1));
}

TEST_CASE("baselines ensemble validation") {
    CHECK_THROWS_AS(hermex::generate_paths(1, 0, 10, 1.0), hermex::ConfigError);
    CHECK_THROWS_AS(hermex::generate_paths(1, 10, 0, 1.0), hermex::ConfigError);
    CHECK_THROWS_AS(hermex::generate_paths(1, 10, 10, 0.0), hermex::ConfigError);
    CHECK_THROWS_AS(hermex::generate_paths(1, 10, 10, -1.0), hermex::ConfigError);
    CHECK_THROWS_AS(hermex::generate_paths(1, 100000, 10000, 1.0), hermex::ConfigError);

    auto e = hermex::generate_paths(1, 4, 5, 1.0);
    auto p = plain(0.0, 1.0, 0.0, 2.0);  // horizon mismatch
    CHECK_THROWS_AS(hermex::euler_maruyama(p, e), hermex::ConfigError);
    auto q = plain(0.0, 1.0, 0.0, 1.0);
    q.drift = nullptr;
    CHECK_THROWS_AS(hermex::euler_maruyama(q, e), hermex::ConfigError);
}

TEST_CASE("baselines euler maruyama degenerate fields") {
    auto e = hermex::generate_paths(11, 3, 20, 1.0);

    // pure noise: trajectory is exactly the running increment sum
    BaselineOptions keep;
    keep.keep_trajectories = true;
    auto r = hermex::euler_maruyama(plain(0.0, 1.0, 0.0, 1.0), e, keep);
    REQUIRE(r.trajectories.size() == 3);
    for (int p = 0; p < 3; ++p) {
        CHECK(r.trajectories[p][0] == 0.0);
        double acc = 0.0;
        for (int s = 0; s < 20; ++s) {
            acc += e.increment(p, s);
            CHECK(r.trajectories[p][s + 1] == acc);
        }
        CHECK(r.terminal[p] == acc);
        CHECK(r.failed_step[p] == -1);
    }

    // pure drift: dX = dt integrates to the horizon
    auto d = hermex::euler_maruyama(plain(1.0, 0.0, 0.0, 1.0),
                                    hermex::generate_paths(11, 1, 10, 1.0));
    CHECK_THAT(d.terminal[0], WithinAbs(1.0, 1e-12));
}

TEST_CASE("baselines euler maruyama martingale mean") {
    auto e = hermex::generate_paths(2024, 100000, 100, 1.0);
    auto r = hermex::euler_maruyama(lognormal(0.0, 0.5, 1.0, 1.0), e);
    auto m = hermex::mc_moments(r);
    CHECK(m.samples == 100000);
    CHECK(std::fabs(m.mean - 1.0) <= 3.0 * m.stderr_mean);
}

TEST_CASE("baselines milstein correction") {
    // constant diffusion with gx supplied: bit-identical to plain EM
    auto e = hermex::generate_paths(5, 50, 30, 1.0);
    auto p = plain(0.3, 0.7, 0.2, 1.0);
    auto em = hermex::euler_maruyama(p, e);
    auto mil = hermex::milstein(p, e, [](double, double) { return 0.0; });
    for (int i = 0; i < 50; ++i) CHECK(em.terminal[i] == mil.terminal[i]);

    // one arranged step with dW^2 = h: the correction vanishes exactly
    PathEnsemble one;
    one.seed = 0;
    one.paths = 1;
    one.steps = 1;
    one.horizon = 0.01;
    one.increments = {0.1};
    auto gbm2 = lognormal(0.0, 2.0, 1.0, 0.01);
    auto exact_gx = hermex::milstein(gbm2, one, [](double, double) { return 2.0; });
    CHECK_THAT(exact_gx.terminal[0], WithinAbs(1.2, 1e-14));
    auto fd_gx = hermex::milstein(gbm2, one);
    CHECK_THAT(fd_gx.terminal[0], WithinAbs(1.2, 1e-9));
}

TEST_CASE("baselines strong convergence orders on the lognormal model") {
    const double sigma = 0.5, mu = 0.1;
    const int paths = 2000;
    std::vector<double> log_h, log_em, log_mil;
    for (int m : {50, 100, 200, 400}) {
        auto e = hermex::generate_paths(7, paths, m, 1.0);
        auto p = lognormal(mu, sigma, 1.0, 1.0);
        auto em = hermex::euler_maruyama(p, e);
        auto mil = hermex::milstein(p, e, [sigma](double, double) { return sigma; });
        double se = 0.0, sm = 0.0;
        for (int i = 0; i < paths; ++i) {
            double w = 0.0;
            for (int s = 0; s < m; ++s) w += e.increment(i, s);
            const double exact = std::exp(sigma * w + mu - 0.5 * sigma * sigma);
            se += (em.terminal[i] - exact) * (em.terminal[i] - exact);
            sm += (mil.terminal[i] - exact) * (mil.terminal[i] - exact);
        }
        log_h.push_back(std::log(1.0 / m));
        log_em.push_back(0.5 * std::log(se / paths));
        log_mil.push_back(0.5 * std::log(sm / paths));
    }
    const double slope_em = oracle::regression_slope(log_h, log_em);
    const double slope_mil = oracle::regression_slope(log_h, log_mil);
    CHECK_THAT(slope_em, WithinAbs(0.5, 0.2));
    CHECK_THAT(slope_mil, WithinAbs(1.0, 0.2));
    // Milstein beats EM outright at the finest grid
    CHECK(log_mil.back() < log_em.back());
}

TEST_CASE("baselines predictor corrector") {
    // constant drift: the corrector averages two equal slopes, EM unchanged
    auto e = hermex::generate_paths(3, 20, 25, 1.0);
    auto p = plain(0.4, 0.6, 0.0, 1.0);
    BaselineOptions pc;
    pc.predictor_corrector = true;
    auto plain_r = hermex::euler_maruyama(p, e);
    auto pc_r = hermex::euler_maruyama(p, e, pc);
    for (int i = 0; i < 20; ++i) CHECK(plain_r.terminal[i] == pc_r.terminal[i]);

    // deterministic linear decay: corrector upgrades the order
    SdeProblem ode;
    ode.drift = [](double x, double) { return -x; };
    ode.diffusion = [](double, double) { return 0.0; };
    ode.x0 = 1.0;
    ode.horizon = 1.0;
    auto grid = hermex::generate_paths(1, 1, 10, 1.0);
    const double exact = std::exp(-1.0);
    const double em_err =
        std::fabs(hermex::euler_maruyama(ode, grid).terminal[0] - exact);
    const double pc_err =
        std::fabs(hermex::euler_maruyama(ode, grid, pc).terminal[0] - exact);
    CHECK(pc_err * 5.0 < em_err);
}

TEST_CASE("baselines aborts non-finite paths and reports the rest") {
    SdeProblem p;
    p.drift = [](double x, double) { return x > 1.5 ? std::exp(800.0) : 0.0; };
    p.diffusion = [](double, double) { return 1.0; };
    p.x0 = 0.0;
    p.horizon = 1.0;
    auto e = hermex::generate_paths(99, 400, 100, 1.0);
    auto r = hermex::euler_maruyama(p, e);
    int failed = 0, survived = 0;
    for (int i = 0; i < 400; ++i) {
        if (r.failed_step[i] >= 0) {
            ++failed;
            CHECK(std::isnan(r.terminal[i]));
        } else {
            ++survived;
            CHECK(std::isfinite(r.terminal[i]));
        }
    }
    CHECK(failed > 0);
    CHECK(survived > 0);
    auto m = hermex::mc_moments(r);
    CHECK(m.samples == survived);
}

TEST_CASE("baselines clamp counting for square root diffusions") {
    SdeProblem p;
    p.drift = [](double, double) { return 0.0; };
    p.diffusion = [](double x, double) { return std::sqrt(std::max(x, 0.0)); };
    p.x0 = 0.01;
    p.horizon = 1.0;
    p.nonnegative_state = true;
    auto e = hermex::generate_paths(13, 200, 100, 1.0);
    auto r = hermex::euler_maruyama(p, e);
    CHECK(r.clamp_count > 0);
    for (double v : r.terminal) CHECK(std::isfinite(v));
}

TEST_CASE("baselines monte carlo moments") {
    hermex::SchemeResult constant;
    constant.terminal = {2.5, 2.5, 2.5, 2.5};
    constant.failed_step = {-1, -1, -1, -1};
    auto mc = hermex::mc_moments(constant);
    CHECK(mc.mean == 2.5);
    CHECK(mc.variance == 0.0);
    CHECK(mc.stderr_mean == 0.0);
    CHECK(mc.samples == 4);

    hermex::SchemeResult tiny;
    tiny.terminal = {1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(hermex::mc_moments(tiny), std::domain_error);

    auto e = hermex::generate_paths(77, 100000, 100, 1.0);
    auto gbm = hermex::mc_moments(hermex::euler_maruyama(lognormal(0.0, 0.5, 1.0, 1.0), e));
    CHECK(std::fabs(gbm.mean - 1.0) <= 3.0 * gbm.stderr_mean);
    // EM carries O(h) weak bias on the variance; allow bias + 3 SE
    const double exact_var = std::exp(0.25) - 1.0;
    CHECK(std::fabs(gbm.variance - exact_var) <= 0.01 + 3.0 * gbm.stderr_variance);

    auto w = hermex::generate_paths(78, 100000, 50, 2.0);
    auto wiener = hermex::mc_moments(hermex::euler_maruyama(plain(0.0, 1.0, 0.0, 2.0), w));
    CHECK(std::fabs(wiener.variance - 2.0) <= 3.0 * wiener.stderr_variance);
}
