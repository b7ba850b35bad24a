#include "gwc/iterate.hpp"

#include <cmath>

namespace gwc {

double f_n_eval(const IterationContext& ctx, long n, double s) {
    if (n < 0) throw ValidationError("f_n requires n >= 0");
    if (s < 0.0) throw DomainError("f_n requires s >= 0");
    // Innermost mechanism is the one active at generation n-1.
    double x = s;
    for (long i = n - 1; i >= 0; --i) x = ctx.pair.at_generation(static_cast<std::size_t>(i)).pgf(x);
    return x;
}

double alpha_eval(const IterationContext& ctx, long k, double s) {
    if (k < 0) throw ValidationError("alpha iterate requires k >= 0");
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    double x = s;
    for (long i = 0; i < k; ++i) x = a.pgf(b.pgf(x));
    return x;
}

double beta_eval(const IterationContext& ctx, long k, double s) {
    if (k < 0) throw ValidationError("beta iterate requires k >= 0");
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    double x = s;
    for (long i = 0; i < k; ++i) x = b.pgf(a.pgf(x));
    return x;
}

ExtinctionResult extinction(const IterationContext& ctx) {
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    if (a.prob(0) == 1.0 || b.prob(0) == 1.0)
        throw ValidationError("degenerate mechanism with all mass at 0 is rejected");

    ExtinctionResult r;
    r.regime = classify(ctx.pair);
    const double m = a.mean() * b.mean();
    r.rho_a = smallest_fixed_point([&](double s) { return a.pgf(s); }, a.mean(), ctx.tolerance,
                                   ctx.max_iter);
    r.rho_b = smallest_fixed_point([&](double s) { return b.pgf(s); }, b.mean(), ctx.tolerance,
                                   ctx.max_iter);
    r.rho_ab = smallest_fixed_point([&](double s) { return a.pgf(b.pgf(s)); }, m, ctx.tolerance,
                                    ctx.max_iter);
    r.rho_ba = smallest_fixed_point([&](double s) { return b.pgf(a.pgf(s)); }, m, ctx.tolerance,
                                    ctx.max_iter);

    // Convergence witness: alpha_k(0) increases to rho_ab; a second route
    // guarding the bracketing.
    if (r.regime == Criticality::Supercritical) {
        double x = 0.0;
        for (int k = 0; k < ctx.max_iter; ++k) {
            const double next = a.pgf(b.pgf(x));
            if (std::abs(next - x) < ctx.tolerance / 10.0) {
                x = next;
                if (std::abs(x - r.rho_ab) > 1e-6)
                    throw NonConvergence("fixed-point witness disagrees with bisection root");
                break;
            }
            x = next;
        }
    }
    return r;
}

TruncatedSeries zn_distribution(const IterationContext& ctx, long n, Eigen::Index degree_cap) {
    if (n < 0) throw ValidationError("zn_distribution requires n >= 0");
    TruncatedSeries s = TruncatedSeries::identity();
    for (long i = n - 1; i >= 0; --i)
        s = compose_outer(ctx.pair.at_generation(static_cast<std::size_t>(i)), s, degree_cap);
    return s;
}

std::vector<TruncatedSeries> zn_distribution_scan(const IterationContext& ctx, long n_max,
                                                  Eigen::Index degree_cap) {
    if (n_max < 0) throw ValidationError("scan requires n_max >= 0");
    std::vector<TruncatedSeries> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    out.push_back(TruncatedSeries::identity());
    for (long n = 0; n < n_max; ++n) {
        // E[s^{Z_{n+1}}] = G_n(f(mech_n; s)).
        const auto poly =
            TruncatedSeries::from_distribution(ctx.pair.at_generation(static_cast<std::size_t>(n)));
        out.push_back(compose_with_poly(out.back(), poly, degree_cap));
    }
    return out;
}

double g_eval(const OffspringDistribution& dist, double s, double tol) {
    if (dist.prob(0) != 0.0 || dist.prob(1) <= 0.0)
        throw NonMonotone("inverse PGF requires p_0 = 0 and p_1 > 0");
    if (s < 0.0) throw DomainError("inverse PGF argument must be nonnegative");
    if (s == 0.0) return 0.0;

    double lo = 0.0, hi = std::max(1.0, s);
    int guard = 0;
    while (dist.pgf(hi) < s) {
        hi *= 2.0;
        if (++guard > 200) throw DomainError("inverse PGF argument outside reachable range");
    }
    // Bracketed Newton with bisection fallback.
    double x = std::min(s, hi);
    for (int it = 0; it < 300; ++it) {
        const double fx = dist.pgf(x) - s;
        if (fx > 0.0)
            hi = x;
        else if (fx < 0.0)
            lo = x;
        else
            return x;
        const double dfx = dist.pgf_derivative(x, 1);
        double next = (dfx > 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= tol * std::max(1.0, std::abs(next))) return next;
        x = next;
    }
    if (hi - lo > 1e-9) throw NonConvergence("inverse PGF solve did not converge");
    return x;
}

double g_n_eval(const IterationContext& ctx, IterOrder order, long n, double s) {
    if (n < 0) throw ValidationError("g_n requires n >= 0");
    const auto& first = (order == IterOrder::ab) ? ctx.pair.a() : ctx.pair.b();
    const auto& second = (order == IterOrder::ab) ? ctx.pair.b() : ctx.pair.a();
    double x = s;
    for (long i = 1; i <= n; ++i) x = g_eval((i % 2 == 1) ? first : second, x, ctx.tolerance);
    return x;
}

}  // namespace gwc
