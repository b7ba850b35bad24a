#include "gwc/deviation.hpp"

#include <cmath>

namespace gwc {

namespace {
constexpr double kConvBudget = 1.0e6;  // max k * K for exact convolution

double mass_outside(const Eigen::ArrayXd& pmf, long k, double mean, double epsilon) {
    // Strict inequality: mass exactly at distance epsilon is excluded.
    const double lo = static_cast<double>(k) * (mean - epsilon);
    const double hi = static_cast<double>(k) * (mean + epsilon);
    double out = 0.0;
    for (Eigen::Index s = 0; s < pmf.size(); ++s) {
        const double sv = static_cast<double>(s);
        if (sv < lo || sv > hi) out += pmf[s];
    }
    return out;
}
}  // namespace

double phi_exact(const OffspringDistribution& dist, long k, double epsilon) {
    if (k < 1) throw ValidationError("phi requires k >= 1");
    if (!(epsilon > 0.0)) throw ValidationError("phi requires epsilon > 0");
    if (!dist.exact()) throw PreconditionViolation("phi requires exact finite support");
    if (static_cast<double>(k) * static_cast<double>(dist.max_support()) > kConvBudget)
        throw DegreeOverflow("k-fold convolution exceeds the degree budget");
    Eigen::ArrayXd pmf = dist.probs();
    for (long i = 1; i < k; ++i) pmf = convolve(pmf, dist.probs());
    return mass_outside(pmf, k, dist.mean(), epsilon);
}

Eigen::ArrayXd phi_table(const OffspringDistribution& dist, long k_max, double epsilon) {
    if (k_max < 1) throw ValidationError("phi table requires k_max >= 1");
    if (!(epsilon > 0.0)) throw ValidationError("phi requires epsilon > 0");
    if (static_cast<double>(k_max) * static_cast<double>(dist.max_support()) > kConvBudget)
        throw DegreeOverflow("k-fold convolution exceeds the degree budget");
    Eigen::ArrayXd out(k_max + 1);
    out[0] = 0.0;
    Eigen::ArrayXd pmf = dist.probs();
    out[1] = mass_outside(pmf, 1, dist.mean(), epsilon);
    for (long k = 2; k <= k_max; ++k) {
        pmf = convolve(pmf, dist.probs());
        out[k] = mass_outside(pmf, k, dist.mean(), epsilon);
    }
    return out;
}

namespace {
// Golden-section minimum of a convex function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}
}  // namespace

ChernoffRate chernoff_rate(const OffspringDistribution& dist, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("chernoff_rate requires epsilon > 0");
    if (!dist.exact()) throw PreconditionViolation("chernoff_rate requires exact finite support");
    const double m = dist.mean();
    ChernoffRate rate;
    rate.epsilon = epsilon;
    rate.upper_active = epsilon < static_cast<double>(dist.max_support()) - m;
    rate.lower_active = epsilon < m - static_cast<double>(dist.min_support());

    if (rate.upper_active) {
        // Minimize log f(e^u) - (m+eps) u over u > 0; the objective is convex
        // (PGFs are log-convex in log s) and eventually increasing for finite
        // support, extend the bracket if the minimum sits at the boundary.
        const auto h = [&](double u) {
            return std::log(dist.pgf(std::exp(u))) - (m + epsilon) * u;
        };
        double hi = std::log(10.0);
        double u_star = golden_min(h, 0.0, hi, 1e-12);
        int guard = 0;
        while (hi - u_star < 1e-6 && ++guard < 40) {
            hi *= 2.0;
            u_star = golden_min(h, 0.0, hi, 1e-12);
        }
        rate.alpha_star = std::exp(u_star);
        rate.upper_value = std::exp(h(u_star));
    }
    if (rate.lower_active) {
        const auto h = [&](double u) {
            return std::log(dist.pgf(std::exp(u))) - (m - epsilon) * u;
        };
        const double u_star = golden_min(h, -40.0, 0.0, 1e-12);
        rate.beta_star = std::exp(u_star);
        rate.lower_value = std::exp(h(u_star));
    }
    rate.lambda = std::max(rate.upper_value, rate.lower_value);
    return rate;
}

namespace {
Eigen::Index phi_horizon(const ChernoffRate& rate, Eigen::Index cap, Eigen::Index max_support) {
    if (rate.lambda <= 0.0) return 1;
    if (rate.lambda >= 1.0) return cap;  // no geometric cutoff available
    const double j = std::log(1e-18 / 2.0) / std::log(rate.lambda);
    auto out = static_cast<Eigen::Index>(std::ceil(j));
    out = std::max<Eigen::Index>(out, 64);
    out = std::min(out, cap);
    out = std::min(out, static_cast<Eigen::Index>(kConvBudget) / std::max<Eigen::Index>(1, max_support));
    return out;
}

DeviationReport report_from_series(const TruncatedSeries& dist_n, long n,
                                   const Eigen::ArrayXd& phis, const ChernoffRate& rate,
                                   double a1, double b1) {
    DeviationReport rep;
    rep.n = n;
    const Eigen::Index upto = std::min<Eigen::Index>(dist_n.degree(), phis.size() - 1);
    double exact = 0.0;
    for (Eigen::Index j = 1; j <= upto; ++j) exact += dist_n.coeffs()[j] * phis[j];
    // Mass beyond the phi table, bounded by the Chernoff tail.
    double tail = 0.0;
    if (rate.lambda > 0.0 && rate.lambda < 1.0) {
        double lam_pow = std::pow(rate.lambda, static_cast<double>(upto + 1));
        for (Eigen::Index j = upto + 1; j <= dist_n.degree(); ++j) {
            tail += 2.0 * dist_n.coeffs()[j] * lam_pow;
            lam_pow *= rate.lambda;
        }
        tail += 2.0 * dist_n.tail_bound() *
                std::pow(rate.lambda, static_cast<double>(dist_n.degree() + 1));
    } else if (rate.lambda >= 1.0) {
        tail = dist_n.tail_bound() + (1.0 - dist_n.coeffs().head(upto + 1).sum());
    }
    rep.exact = exact;
    rep.tail_bound = tail;
    // Companion Chernoff-only bound on the same probability.
    if (rate.lambda > 0.0 && rate.lambda < 1.0) {
        double cb = 0.0;
        double lam_pow = rate.lambda;
        for (Eigen::Index j = 1; j <= dist_n.degree(); ++j) {
            cb += dist_n.coeffs()[j] * std::min(1.0, 2.0 * lam_pow);
            lam_pow *= rate.lambda;
        }
        rep.chernoff_bound = std::min(1.0, cb + dist_n.tail_bound());
    } else {
        rep.chernoff_bound = 1.0;
    }
    // Normalizer: (a1 b1)^k for n = 2k, a1^k b1^{k-1} for n = 2k-1.
    double norm;
    if (n % 2 == 0) {
        norm = std::pow(a1 * b1, static_cast<double>(n / 2));
    } else {
        const long k = (n + 1) / 2;
        norm = std::pow(a1, static_cast<double>(k)) * std::pow(b1, static_cast<double>(k - 1));
    }
    rep.normalized = exact / norm;
    return rep;
}

void require_no_deaths(const IterationContext& ctx, const char* what) {
    if (ctx.pair.a().prob(0) != 0.0 || ctx.pair.b().prob(0) != 0.0)
        throw PreconditionViolation(std::string(what) + " requires a_0 = b_0 = 0");
}
}  // namespace

DeviationReport ratio_deviation_exact(const IterationContext& ctx, long n, double epsilon,
                                      Eigen::Index degree_cap) {
    require_no_deaths(ctx, "ratio_deviation_exact");
    const auto& active = ctx.pair.at_generation(static_cast<std::size_t>(n));
    const auto rate = chernoff_rate(active, epsilon);
    const auto dist_n = zn_distribution(ctx, n, degree_cap);
    const Eigen::Index J = phi_horizon(rate, degree_cap, active.max_support());
    const Eigen::ArrayXd phis =
        (rate.lambda > 0.0 || rate.upper_active || rate.lower_active)
            ? phi_table(active, J, epsilon)
            : Eigen::ArrayXd::Zero(2);
    return report_from_series(dist_n, n, phis, rate, ctx.pair.a().prob(1), ctx.pair.b().prob(1));
}

std::vector<DeviationReport> ratio_deviation_scan(const IterationContext& ctx, long n_max,
                                                  double epsilon, Eigen::Index degree_cap) {
    require_no_deaths(ctx, "ratio_deviation_scan");
    const auto rate_a = chernoff_rate(ctx.pair.a(), epsilon);
    const auto rate_b = chernoff_rate(ctx.pair.b(), epsilon);
    const Eigen::Index Ja = phi_horizon(rate_a, degree_cap, ctx.pair.a().max_support());
    const Eigen::Index Jb = phi_horizon(rate_b, degree_cap, ctx.pair.b().max_support());
    const Eigen::ArrayXd phi_a = phi_table(ctx.pair.a(), Ja, epsilon);
    const Eigen::ArrayXd phi_b = phi_table(ctx.pair.b(), Jb, epsilon);
    const auto dists = zn_distribution_scan(ctx, n_max, degree_cap);
    std::vector<DeviationReport> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    for (long n = 0; n <= n_max; ++n) {
        const bool a_side = (n % 2 == 0);
        out.push_back(report_from_series(dists[static_cast<std::size_t>(n)], n,
                                         a_side ? phi_a : phi_b, a_side ? rate_a : rate_b,
                                         ctx.pair.a().prob(1), ctx.pair.b().prob(1)));
    }
    return out;
}

LimitSumResult limit_sum(const IterationContext& ctx, double epsilon, Side side, Eigen::Index J,
                         double tail_tol) {
    require_no_deaths(ctx, "limit_sum");
    const auto& active = (side == Side::a) ? ctx.pair.a() : ctx.pair.b();
    const auto rate = chernoff_rate(active, epsilon);
    if (rate.lambda == 0.0) return {0.0, 0.0, 0, true};

    const Eigen::Index budget = 1 << 15;
    double prev_partial = -1.0;
    for (Eigen::Index cur_J = std::max<Eigen::Index>(J, 64); cur_J <= budget; cur_J *= 2) {
        const auto qc = q_coefficients(ctx, cur_J, 1e-11);
        const auto& q = (side == Side::a) ? qc.q : qc.q_tilde;
        const Eigen::ArrayXd phis = phi_table(active, cur_J, epsilon);
        double partial = 0.0;
        for (Eigen::Index j = 1; j <= cur_J; ++j) partial += phis[j] * q.coeffs()[j];

        // Geometric certificate: ratio test on trailing q-coefficients times
        // the Chernoff decay of phi.
        double rq = 0.0;
        for (Eigen::Index j = cur_J - 32; j < cur_J; ++j) {
            if (q.coeffs()[j] > 0.0) rq = std::max(rq, q.coeffs()[j + 1] / q.coeffs()[j]);
        }
        const double rho = rq * rate.lambda;
        if (rq > 0.0 && rho < 1.0) {
            const double tail = 2.0 * q.coeffs()[cur_J] *
                                std::pow(rate.lambda, static_cast<double>(cur_J)) * rho /
                                (1.0 - rho);
            if (tail < tail_tol) return {partial, tail, cur_J, true};
        }
        // Weaker Cauchy certificate.
        if (prev_partial >= 0.0 && std::abs(partial - prev_partial) < tail_tol)
            return {partial, std::abs(partial - prev_partial), cur_J, false};
        prev_partial = partial;
    }
    throw NonConvergence("limit_sum tail certificate did not reach tail_tol within budget");
}

namespace {
// Pointwise Q / QTilde in the a_0 = b_0 = 0 normalization:
// Q(s) = lim f_{2n}(ab;s)/(a1 b1)^n. Monotone nondecreasing in n.
double q_zero_value(const IterationContext& ctx, double s, double tol, bool tilde) {
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    const double a1 = a.prob(1), b1 = b.prob(1);
    double x = tilde ? a.pgf(s) : s;
    double scale = tilde ? a1 : 1.0;
    double prev = x / scale;
    for (long k = 1; k <= 400; ++k) {
        x = a.pgf(b.pgf(x));
        scale *= a1 * b1;
        if (scale < 1e-280) throw NonConvergence("normalizer underflow in Q evaluation");
        const double cur = x / scale;
        if (std::abs(cur - prev) < tol * (1.0 + std::abs(cur))) return cur;
        prev = cur;
    }
    throw NonConvergence("pointwise Q iteration did not converge");
}

double gauss_legendre_64(const std::function<double(double)>& f, double lo, double hi, int points) {
    // Composite Gauss-Legendre via 8-point panels.
    static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    const int panels = std::max(1, points / 8);
    const double h = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = lo + (p + 0.5) * h;
        const double half = 0.5 * h;
        double acc = 0.0;
        for (int i = 0; i < 4; ++i)
            acc += wg[i] * (f(c + half * xg[i]) + f(c - half * xg[i]));
        total += acc * half;
    }
    return total;
}
}  // namespace

QkIntegral qk_integral(const IterationContext& ctx, double r, int quad_points) {
    require_no_deaths(ctx, "qk_integral");
    if (!(r > 0.0)) throw ValidationError("qk_integral requires r > 0");
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    const double tol = 1e-11;
    const auto Q = [&](double s) { return q_zero_value(ctx, s, tol, false); };
    const auto integrand = [&](double s) {
        return Q(s) * std::pow(std::abs(std::log(s)), r - 1.0) / s;
    };

    QkIntegral out;
    const double t0 = 0.5;

    // (0, t0]: substitute u = -log s; the integrand becomes Q(e^-u) u^{r-1},
    // smooth and geometrically decaying in u.
    {
        const auto g = [&](double u) {
            return q_zero_value(ctx, std::exp(-u), tol, false) * std::pow(u, r - 1.0);
        };
        double u_lo = -std::log(t0);
        double piece;
        do {
            piece = gauss_legendre_64(g, u_lo, u_lo + 4.0, quad_points);
            out.value += piece;
            u_lo += 4.0;
        } while (piece > 1e-15 * (1.0 + out.value) && u_lo < 800.0);
    }

    // [t0, 1): geometric blocks t_{m+1} = g(b; g(a; t_m)) mirroring the
    // inverse-iterate partition; fall back to halving toward 1 when the
    // inverse map does not advance.
    double t = t0;
    double prev_block = -1.0;
    double ratio = 1.0;
    const int max_blocks = 400;
    for (int mblk = 0; mblk < max_blocks; ++mblk) {
        double t_next = g_eval(b, g_eval(a, t, tol), tol);
        if (t_next - t < 1e-12) t_next = 0.5 * (t + 1.0);
        if (t_next >= 1.0 - 1e-13) t_next = 1.0 - 1e-13;
        const double block = gauss_legendre_64(integrand, t, t_next, quad_points);
        out.value += block;
        ++out.blocks;
        if (prev_block > 0.0 && block > 0.0) {
            ratio = block / prev_block;
            out.last_block_ratio = ratio;
            if (ratio < 1.0 && block / (1.0 - ratio) < 1e-12 * (1.0 + out.value)) {
                out.error_estimate = block * ratio / (1.0 - ratio);
                return out;
            }
        }
        prev_block = block;
        t = t_next;
        if (block < 1e-15 * (1.0 + out.value)) {
            out.error_estimate = block;
            return out;
        }
    }
    if (ratio >= 1.0)
        throw DivergenceSuspected("block ratios did not drop below 1; integral may diverge");
    // Geometric extrapolation of the remaining blocks.
    out.error_estimate = prev_block * ratio / (1.0 - ratio);
    out.value += out.error_estimate;
    return out;
}

bool moment_condition_check(const MechanismSchedule& pair, double r, double /*delta*/) {
    pair.require_pair("moment_condition_check");
    const double a1 = pair.a().prob(1), b1 = pair.b().prob(1);
    const double ma = pair.a().mean(), mb = pair.b().mean();
    return a1 * std::pow(ma, r) > 1.0 && b1 * std::pow(mb, r) > 1.0;
}

}  // namespace gwc
