#include <doctest.h>

#include <cmath>
#include <random>

#include "gwc/iterate.hpp"

using namespace gwc;

namespace {
OffspringDistribution random_dist(std::mt19937& rng, int max_index) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd p(max_index + 1);
    for (int i = 0; i <= max_index; ++i) p[i] = u(rng);
    p /= p.sum();
    return OffspringDistribution(p);
}

IterationContext test_pair() {
    const OffspringDistribution half({0.0, 0.5, 0.5});
    return IterationContext(MechanismSchedule({half, half}));
}

// Independent oracle for the alternating composition, written as the
// recursion on the *outside*: h_{n+1}(s) = f(mech at generation n applied to
// the innermost slot) is awkward; instead use the defining recursion
// F_{2k+1}(s) = F_{2k}(f(a;s)), F_{2k+2}(s) = F_{2k+1}(f(b;s)).
double f_n_oracle(const MechanismSchedule& pair, long n, double s) {
    if (n == 0) return s;
    const auto& innermost = pair.at_generation(static_cast<std::size_t>(n - 1));
    return f_n_oracle(pair, n - 1, innermost.pgf(s));
}
}  // namespace

TEST_CASE("f_n matches the recursive definition") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> us(0.0, 1.0);
    const auto a = random_dist(rng, 3);
    const auto b = random_dist(rng, 2);
    const IterationContext ctx(MechanismSchedule({a, b}));
    for (long n = 0; n <= 9; ++n) {
        const double s = us(rng);
        CHECK(f_n_eval(ctx, n, s) == doctest::Approx(f_n_oracle(ctx.pair, n, s)).epsilon(1e-13));
    }
}

TEST_CASE("even iterates are powers of alpha") {
    const auto ctx = test_pair();
    for (long k = 0; k <= 5; ++k)
        for (double s : {0.0, 0.3, 0.7, 1.0})
            CHECK(alpha_eval(ctx, k, s) == doctest::Approx(f_n_eval(ctx, 2 * k, s)).epsilon(1e-13));
}

TEST_CASE("beta is the role-swapped composition") {
    std::mt19937 rng(32);
    const auto a = random_dist(rng, 2);
    const auto b = random_dist(rng, 3);
    const IterationContext ctx(MechanismSchedule({a, b}));
    for (double s : {0.2, 0.6}) {
        CHECK(beta_eval(ctx, 1, s) == doctest::Approx(b.pgf(a.pgf(s))).epsilon(1e-14));
        CHECK(alpha_eval(ctx, 1, s) == doctest::Approx(a.pgf(b.pgf(s))).epsilon(1e-14));
    }
}

TEST_CASE("extinction quadratic closed form") {
    const OffspringDistribution mech({0.25, 0.0, 0.75});
    const IterationContext ctx(MechanismSchedule({mech, mech}));
    const auto ext = extinction(ctx);
    CHECK(ext.regime == Criticality::Supercritical);
    CHECK(ext.rho_ab == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(ext.rho_ba == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("non-supercritical pairs are surely extinct") {
    std::mt19937 rng(33);
    int found = 0;
    while (found < 10) {
        const auto a = random_dist(rng, 3);
        const auto b = random_dist(rng, 3);
        if (a.mean() * b.mean() > 1.0 - 1e-9) continue;
        if (a.prob(0) == 0.0 || b.prob(0) == 0.0) continue;
        ++found;
        const auto ext = extinction(IterationContext(MechanismSchedule({a, b})));
        CHECK(ext.rho_ab == 1.0);
        CHECK(ext.rho_ba == 1.0);
    }
}

TEST_CASE("extinction cross-relations between the two orderings") {
    // rho_ab = f(a; rho_ba) and rho_ba = f(b; rho_ab).
    std::mt19937 rng(34);
    int found = 0;
    while (found < 10) {
        const auto a = random_dist(rng, 3);
        const auto b = random_dist(rng, 3);
        if (a.mean() * b.mean() <= 1.0 + 1e-6) continue;
        ++found;
        const auto ext = extinction(IterationContext(MechanismSchedule({a, b})));
        CHECK(ext.rho_ab == doctest::Approx(a.pgf(ext.rho_ba)).epsilon(1e-9));
        CHECK(ext.rho_ba == doctest::Approx(b.pgf(ext.rho_ab)).epsilon(1e-9));
    }
}

TEST_CASE("degenerate all-deaths mechanism is rejected") {
    const OffspringDistribution dead({1.0});
    const OffspringDistribution ok({0.0, 0.5, 0.5});
    CHECK_THROWS_AS(extinction(IterationContext(MechanismSchedule({dead, ok}))),
                    ValidationError);
}

TEST_CASE("generation distribution by direct enumeration") {
    // a = {p1=p2=1/2}, b = {p0=1/2, p2=1/2}: enumerate Z_2 by hand.
    const OffspringDistribution a({0.0, 0.5, 0.5});
    const OffspringDistribution b({0.5, 0.0, 0.5});
    const IterationContext ctx(MechanismSchedule({a, b}));
    // Z_1 ~ a: 1 w.p. 1/2, 2 w.p. 1/2. Z_2 = sum of Z_1 draws from b.
    // P(Z_2=0) = 1/2*1/2 + 1/2*1/4 = 3/8; P(Z_2=2) = 1/2*1/2 + 1/2*2*(1/4)
    // = 1/2; P(Z_2=4) = 1/2*1/4 = 1/8.
    const auto z2 = zn_distribution(ctx, 2);
    CHECK(z2.coefficient(0) == doctest::Approx(3.0 / 8.0).epsilon(1e-14));
    CHECK(z2.coefficient(1) == doctest::Approx(0.0));
    CHECK(z2.coefficient(2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(z2.coefficient(4) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("distribution pgf equals the iterate") {
    std::mt19937 rng(35);
    std::uniform_real_distribution<double> us(0.0, 1.0);
    const auto a = random_dist(rng, 3);
    const auto b = random_dist(rng, 2);
    const IterationContext ctx(MechanismSchedule({a, b}));
    for (long n = 0; n <= 6; ++n) {
        const auto series = zn_distribution(ctx, n);
        REQUIRE(series.exact());
        const double s = us(rng);
        CHECK(series.eval(s).lo == doctest::Approx(f_n_eval(ctx, n, s)).epsilon(1e-12));
    }
}

TEST_CASE("scan agrees with one-shot distributions") {
    const auto ctx = test_pair();
    const auto scan = zn_distribution_scan(ctx, 6);
    REQUIRE(scan.size() == 7);
    for (long n = 0; n <= 6; ++n) {
        const auto direct = zn_distribution(ctx, n);
        REQUIRE(scan[static_cast<std::size_t>(n)].degree() == direct.degree());
        for (Eigen::Index j = 0; j <= direct.degree(); ++j)
            CHECK(scan[static_cast<std::size_t>(n)].coefficient(j) ==
                  doctest::Approx(direct.coefficient(j)).epsilon(1e-13));
    }
}

TEST_CASE("inverse pgf round trips") {
    std::mt19937 rng(36);
    std::uniform_real_distribution<double> us(0.05, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = random_dist(rng, 3).probs();
        p[0] = 0.0;
        p[1] += 0.1;  // keep p1 > 0
        OffspringDistribution d(p / p.sum());
        const double s = us(rng);
        const double g = g_eval(d, s);
        CHECK(d.pgf(g) == doctest::Approx(s).epsilon(1e-11));
        const double x = us(rng);
        CHECK(g_eval(d, d.pgf(x)) == doctest::Approx(x).epsilon(1e-11));
    }
}

TEST_CASE("inverse pgf rejects non-invertible mechanisms") {
    CHECK_THROWS_AS(g_eval(OffspringDistribution({0.5, 0.5}), 0.7), NumericalError);
    CHECK_THROWS_AS(g_eval(OffspringDistribution({0.0, 0.0, 1.0}), 0.7), NumericalError);
}

TEST_CASE("alternating inverse iterates invert the matching compositions") {
    const auto ctx = test_pair();
    for (long n = 1; n <= 8; ++n) {
        for (double s : {0.3, 0.9, 1.4}) {
            const double g_ab = g_n_eval(ctx, IterOrder::ab, n, s);
            CHECK(f_n_eval(ctx, n, g_ab) == doctest::Approx(s).epsilon(1e-10));
        }
    }
    // ba-order: g_1(ba;s) = g(b;s), checked against the swapped pair.
    const OffspringDistribution a({0.0, 0.5, 0.5});
    const OffspringDistribution b({0.0, 0.25, 0.75});
    const IterationContext ab(MechanismSchedule({a, b}));
    const IterationContext ba(MechanismSchedule({b, a}));
    for (long n = 1; n <= 6; ++n)
        for (double s : {0.5, 1.2})
            CHECK(g_n_eval(ab, IterOrder::ba, n, s) ==
                  doctest::Approx(g_n_eval(ba, IterOrder::ab, n, s)).epsilon(1e-11));
}

TEST_CASE("inverse iterates of s > 1 decrease toward 1") {
    const auto ctx = test_pair();
    double prev = g_n_eval(ctx, IterOrder::ab, 1, 1.5);
    for (long n = 2; n <= 20; ++n) {
        const double cur = g_n_eval(ctx, IterOrder::ab, n, 1.5);
        CHECK(cur < prev + 1e-12);
        CHECK(cur > 1.0);
        prev = cur;
    }
}
