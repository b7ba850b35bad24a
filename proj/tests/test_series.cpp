#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gwc/series.hpp"

using namespace gwc;

namespace {
OffspringDistribution random_dist(std::mt19937& rng, int max_index) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd p(max_index + 1);
    for (int i = 0; i <= max_index; ++i) p[i] = u(rng);
    p /= p.sum();
    return OffspringDistribution(p);
}

// Brute-force polynomial composition sum_j p_j inner(s)^j without any cap:
// repeated full convolution, the independent oracle for compose_outer.
Eigen::ArrayXd compose_oracle(const OffspringDistribution& outer, const Eigen::ArrayXd& inner) {
    const Eigen::Index deg = (inner.size() - 1) * outer.max_index();
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(std::max<Eigen::Index>(deg + 1, 1));
    Eigen::ArrayXd power(1);
    power << 1.0;
    for (Eigen::Index j = 0; j <= outer.max_index(); ++j) {
        for (Eigen::Index i = 0; i < power.size(); ++i) acc[i] += outer.prob(j) * power[i];
        if (j < outer.max_index()) power = convolve(power, inner);
    }
    return acc;
}
}  // namespace

TEST_CASE("identity and distribution constructors") {
    const auto id = TruncatedSeries::identity();
    CHECK(id.coefficient(0) == 0.0);
    CHECK(id.coefficient(1) == 1.0);
    CHECK(id.exact());
    const OffspringDistribution d({0.25, 0.0, 0.75});
    const auto s = TruncatedSeries::from_distribution(d);
    CHECK(s.coefficient(0) == 0.25);
    CHECK(s.coefficient(2) == 0.75);
    CHECK_THROWS_AS(s.coefficient(99), IndexOutOfRange);
}

TEST_CASE("convolve against evaluation at points") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::ArrayXd p(4), q(3);
        for (auto* arr : {&p, &q})
            for (Eigen::Index i = 0; i < arr->size(); ++i) (*arr)[i] = u(rng);
        const Eigen::ArrayXd pq = convolve(p, q);
        // A product of polynomials evaluated at a point equals the product of
        // the evaluations.
        const double s = u(rng);
        double vp = 0.0, vq = 0.0, vpq = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) vp += p[i] * std::pow(s, i);
        for (Eigen::Index i = 0; i < q.size(); ++i) vq += q[i] * std::pow(s, i);
        for (Eigen::Index i = 0; i < pq.size(); ++i) vpq += pq[i] * std::pow(s, i);
        CHECK(vpq == doctest::Approx(vp * vq).epsilon(1e-12));
    }
}

TEST_CASE("compose_outer against the uncapped oracle") {
    std::mt19937 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto outer = random_dist(rng, 3);
        const auto inner_dist = random_dist(rng, 3);
        const auto inner = TruncatedSeries::from_distribution(inner_dist);
        const auto composed = compose_outer(outer, inner, 1024);
        const auto oracle = compose_oracle(outer, inner.coeffs());
        REQUIRE(composed.degree() + 1 >= oracle.size());
        for (Eigen::Index i = 0; i < oracle.size(); ++i)
            CHECK(composed.coefficient(i) == doctest::Approx(oracle[i]).epsilon(1e-13));
        CHECK(composed.exact());
    }
}

TEST_CASE("low-order coefficients survive truncation exactly") {
    std::mt19937 rng(23);
    const auto outer = random_dist(rng, 3);
    auto series = TruncatedSeries::from_distribution(random_dist(rng, 3));
    auto capped = series;
    const Eigen::Index cap = 12;
    for (int step = 0; step < 4; ++step) {
        series = compose_outer(outer, series, 4096);  // effectively uncapped here
        capped = compose_outer(outer, capped, cap);
        REQUIRE(series.exact());
        for (Eigen::Index i = 0; i <= std::min(capped.degree(), cap); ++i)
            CHECK(capped.coefficient(i) == doctest::Approx(series.coefficient(i)).epsilon(1e-13));
    }
    CHECK_FALSE(capped.exact());
    CHECK(capped.tail_bound() > 0.0);
    CHECK(capped.tail_bound() ==
          doctest::Approx(1.0 - capped.coeffs().sum()).epsilon(1e-12));
}

TEST_CASE("compose_with_poly agrees with compose_outer route") {
    // outer(poly(s)) built forward must equal the same composition built by
    // expanding the distribution polynomial through compose_outer.
    std::mt19937 rng(24);
    const auto a = random_dist(rng, 3);
    const auto b = random_dist(rng, 3);
    const auto b_poly = TruncatedSeries::from_distribution(b);
    // f(a; f(b; s)) both ways.
    const auto via_outer = compose_outer(a, b_poly, 256);
    const auto a_series = TruncatedSeries::from_distribution(a);
    const auto via_poly = compose_with_poly(a_series, b_poly, 256);
    REQUIRE(via_outer.degree() == via_poly.degree());
    for (Eigen::Index i = 0; i <= via_outer.degree(); ++i)
        CHECK(via_poly.coefficient(i) ==
              doctest::Approx(via_outer.coefficient(i)).epsilon(1e-13));
}

TEST_CASE("interval evaluation encloses the true value") {
    std::mt19937 rng(25);
    std::uniform_real_distribution<double> us(0.0, 1.0);
    const auto outer = random_dist(rng, 2);
    auto capped = TruncatedSeries::from_distribution(random_dist(rng, 2));
    auto full = capped;
    for (int step = 0; step < 6; ++step) {
        capped = compose_outer(outer, capped, 16);
        full = compose_outer(outer, full, 4096);
    }
    for (int i = 0; i < 10; ++i) {
        const double s = us(rng);
        const double truth = full.eval(s).lo;  // exact series: lo == hi
        const auto box = capped.eval(s);
        CHECK(box.lo <= truth + 1e-12);
        CHECK(box.hi >= truth - 1e-12);
    }
}

TEST_CASE("differentiate against central differences") {
    const OffspringDistribution d({0.1, 0.2, 0.3, 0.4});
    const auto s = TruncatedSeries::from_distribution(d);
    const auto ds = s.differentiate();
    const double h = 1e-6;
    for (double x : {0.2, 0.5, 0.8}) {
        const double fd = (s.eval(x + h).lo - s.eval(x - h).lo) / (2 * h);
        CHECK(ds.eval(x).lo == doctest::Approx(fd).epsilon(1e-7));
    }
    TruncatedSeries inexact(s.coeffs(), 0.1, false);
    CHECK_THROWS_AS(inexact.differentiate(), PreconditionViolation);
}

TEST_CASE("distribution mean and variance against direct sums") {
    std::mt19937 rng(26);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = random_dist(rng, 4);
        const auto s = TruncatedSeries::from_distribution(d);
        CHECK(s.distribution_mean() == doctest::Approx(d.moments().mean).epsilon(1e-13));
        CHECK(s.distribution_variance() ==
              doctest::Approx(d.moments().variance).epsilon(1e-12));
    }
}

TEST_CASE("csv dump carries exactness and tail bound") {
    const auto s = TruncatedSeries::from_distribution(OffspringDistribution({0.5, 0.5}));
    std::ostringstream out;
    dump_series_csv(s, out);
    const std::string text = out.str();
    CHECK(text.find("exact=") != std::string::npos);
    CHECK(text.find("tail_bound=") != std::string::npos);
    CHECK(text.find("0.5") != std::string::npos);
}
