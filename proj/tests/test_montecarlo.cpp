#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>

#include "gwc/deviation.hpp"
#include "gwc/montecarlo.hpp"

using namespace gwc;

namespace {
MechanismSchedule test_pair() {
    const OffspringDistribution half({0.0, 0.5, 0.5});
    return MechanismSchedule({half, half});
}

struct ThreadEnvGuard {
    explicit ThreadEnvGuard(const char* value) { setenv("GWC_THREADS", value, 1); }
    ~ThreadEnvGuard() { unsetenv("GWC_THREADS"); }
};
}  // namespace

TEST_CASE("counter rng is a pure function of its key") {
    CounterRng r1(42, 7, 3);
    CounterRng r2(42, 7, 3);
    for (int i = 0; i < 100; ++i) CHECK(r1() == r2());
    CounterRng r3(42, 8, 3);
    CounterRng r4(42, 7, 4);
    int diff = 0;
    CounterRng r5(42, 7, 3);
    for (int i = 0; i < 100; ++i) {
        const auto v = r5();
        if (v != r3()) ++diff;
        if (v != r4()) ++diff;
    }
    CHECK(diff > 150);  // distinct streams disagree essentially everywhere
}

TEST_CASE("uniform draws live in the unit interval with plausible mean") {
    CounterRng rng(1, 2, 3);
    double sum = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / N == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("alias table reproduces the distribution") {
    const OffspringDistribution d({0.1, 0.2, 0.3, 0.4});
    const AliasTable table(d);
    CounterRng rng(9, 0, 0);
    const int N = 200000;
    Eigen::ArrayXd freq = Eigen::ArrayXd::Zero(4);
    for (int i = 0; i < N; ++i) freq[table.sample(rng)] += 1.0;
    freq /= N;
    for (Eigen::Index j = 0; j < 4; ++j) {
        const double se = std::sqrt(d.prob(j) * (1 - d.prob(j)) / N);
        CHECK(std::abs(freq[j] - d.prob(j)) < 4 * se);
    }
}

TEST_CASE("deterministic mechanisms give deterministic trajectories") {
    const OffspringDistribution two({0.0, 0.0, 1.0});
    const OffspringDistribution three({0.0, 0.0, 0.0, 1.0});
    const SimConfig config(MechanismSchedule({two, three}), 8, 5, 123);
    const auto ens = simulate(config);
    for (long p = 0; p < 5; ++p)
        for (long n = 0; n <= 8; ++n)
            CHECK(ens.trajectories(p, n) == ens.gammas[n]);
    // Identity pair: constant 1 and W_n == 1.
    const OffspringDistribution id({0.0, 1.0});
    const auto flat = simulate(SimConfig(MechanismSchedule({id, id}), 6, 4, 1));
    CHECK((flat.trajectories.array() == 1.0).all());
    CHECK((flat.w_values.array() == 1.0).all());
}

TEST_CASE("simulation is reproducible across thread counts") {
    const SimConfig config(test_pair(), 10, 500, 42);
    Eigen::MatrixXd serial, parallel;
    {
        ThreadEnvGuard guard("1");
        serial = simulate(config).trajectories;
    }
    {
        ThreadEnvGuard guard("8");
        parallel = simulate(config).trajectories;
    }
    CHECK((serial.array() == parallel.array()).all());
    CHECK(simulate(config).trajectories == serial);
}

TEST_CASE("extinction is absorbing") {
    const OffspringDistribution risky({0.25, 0.0, 0.75});
    const auto ens = simulate(SimConfig(MechanismSchedule({risky, risky}), 15, 2000, 7));
    for (long p = 0; p < 2000; ++p) {
        bool dead = false;
        for (long n = 0; n <= 15; ++n) {
            if (dead) CHECK(ens.trajectories(p, n) == 0.0);
            if (ens.trajectories(p, n) == 0.0) dead = true;
        }
    }
}

TEST_CASE("empirical growth tracks the mean normalizer") {
    const auto ens = simulate(SimConfig(test_pair(), 10, 20000, 11));
    const NormalizerTable table(ens.config.schedule);
    for (long n : {4L, 8L, 10L}) {
        const double mean_z = ens.trajectories.col(n).mean();
        const double se = std::sqrt(var_zn(table, n) / 20000.0);
        CHECK(std::abs(mean_z - table.gamma(n)) < 4 * se);
    }
}

TEST_CASE("martingale property across population cells") {
    const auto ens = simulate(SimConfig(test_pair(), 8, 20000, 13));
    const long n = 4;
    const double omega = ens.config.schedule.at_generation(n).mean();
    // Most populated cells of Z_n.
    std::map<long, std::pair<double, long>> cells;
    for (long p = 0; p < 20000; ++p) {
        const long k = static_cast<long>(ens.trajectories(p, n));
        cells[k].first += ens.trajectories(p, n + 1);
        cells[k].second += 1;
    }
    const double var1 = ens.config.schedule.at_generation(n).moments().variance;
    for (const auto& [k, cell] : cells) {
        if (cell.second < 500) continue;
        const double cond_mean = cell.first / cell.second;
        const double se = std::sqrt(var1 * k / cell.second);
        CHECK(std::abs(cond_mean - omega * k) < 4 * se);
    }
}

TEST_CASE("ratio deviation estimator against the exact oracle") {
    const MechanismSchedule pair = test_pair();
    const auto ens = simulate(SimConfig(pair, 8, 50000, 17));
    const IterationContext ctx(pair);
    for (long n = 0; n <= 5; ++n) {
        const auto est = estimate_ratio_deviation(ens, n, 0.25);
        const auto exact = ratio_deviation_exact(ctx, n, 0.25);
        CHECK(std::abs(est.value - exact.exact) < 4 * std::max(est.standard_error, 1e-4));
    }
    // Nested events: larger epsilon, smaller estimate.
    CHECK(estimate_ratio_deviation(ens, 3, 0.1).value >=
          estimate_ratio_deviation(ens, 3, 0.3).value);
}

TEST_CASE("estimator preconditions") {
    const OffspringDistribution risky({0.25, 0.0, 0.75});
    const auto ens = simulate(SimConfig(MechanismSchedule({risky, risky}), 6, 100, 1));
    CHECK_THROWS_AS(estimate_ratio_deviation(ens, 2, 0.25), PreconditionViolation);

    const auto alive = simulate(SimConfig(test_pair(), 6, 300, 1));
    CHECK_THROWS_AS(estimate_ratio_deviation(alive, 6, 0.25), ValidationError);
    // Proxy horizon too close to n.
    CHECK_THROWS_AS(estimate_w_deviation(alive, 4, 0.1, 6), ProxyTooClose);
    CHECK_THROWS_AS(estimate_conditional_deviation(alive, 1, 0.25, 50.0, 6), ValidationError);
}

TEST_CASE("w deviation shrinks with n") {
    const auto ens = simulate(SimConfig(test_pair(), 26, 12000, 19));
    const long N = 26;  // Gamma_26 = 2.25^13 ~ 3.8e4
    const auto early = estimate_w_deviation(ens, 2, 0.25, N);
    const auto late = estimate_w_deviation(ens, 12, 0.25, N);
    CHECK(late.value < early.value + 3 * early.standard_error);
    CHECK(late.value < 0.05);
    CHECK(early.sample_size == 12000);
}

TEST_CASE("conditional deviation and its crude upper bound") {
    const auto ens = simulate(SimConfig(test_pair(), 26, 12000, 23));
    const long N = 26;
    const double delta = 0.5;
    const auto cond = estimate_conditional_deviation(ens, 4, 0.25, delta, N);
    CHECK(cond.sample_size >= 200);
    long heavy = 0;
    for (long p = 0; p < 12000; ++p)
        if (ens.w_values(p, N) >= delta) ++heavy;
    const double p_heavy = static_cast<double>(heavy) / 12000.0;
    const auto uncond = estimate_ratio_deviation(ens, 4, 0.25);
    CHECK(cond.value <= uncond.value / p_heavy + 1e-12);
    // Impossible conditioning has no power.
    CHECK_THROWS_AS(estimate_conditional_deviation(ens, 4, 0.25, 50.0, N),
                    UnderpoweredCondition);
}

TEST_CASE("empirical moments of the martingale") {
    const auto ens = simulate(SimConfig(test_pair(), 12, 50000, 29));
    const NormalizerTable table(ens.config.schedule);
    Eigen::ArrayXd thetas(2);
    thetas << 0.1, 0.3;
    for (long n : {6L, 12L}) {
        const auto wm = empirical_w_moments(ens, n, thetas);
        CHECK(std::abs(wm.mean - 1.0) < 4 * wm.mean_se);
        const double g = table.gamma(n);
        CHECK(std::abs(wm.variance - var_zn(table, n) / (g * g)) < 4 * wm.variance_se);
        CHECK(wm.mgf.size() == 2);
        CHECK(wm.mgf[0] > 1.0);
        CHECK(wm.mgf[1] > wm.mgf[0]);
    }
    // Deterministic pair: variance exactly zero.
    const OffspringDistribution two({0.0, 0.0, 1.0});
    const auto det = simulate(SimConfig(MechanismSchedule({two, two}), 5, 100, 3));
    CHECK(empirical_w_moments(det, 5).variance == 0.0);
}

TEST_CASE("draw budget stops runaway simulations") {
    SimConfig config(test_pair(), 40, 1000, 5);
    config.draw_budget = 1e4;
    CHECK_THROWS_AS(simulate(config), ResourceBudget);
}

TEST_CASE("extinction frequency approaches the exact probability") {
    const OffspringDistribution risky({0.25, 0.0, 0.75});
    const MechanismSchedule pair({risky, risky});
    const auto ens = simulate(SimConfig(pair, 20, 20000, 31));
    const auto ext = extinction(IterationContext(pair));
    const auto freq = extinction_frequency(ens, 20);
    CHECK(std::abs(freq.value - ext.rho_ab) < 4 * std::max(freq.standard_error, 1e-4));
}
