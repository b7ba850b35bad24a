#include "gwc/limits.hpp"

#include <cmath>

namespace gwc {

namespace {
constexpr long kMaxDoubleSteps = 200;
constexpr double kGammaUnderflow = 1e-280;

void require_supercritical(const IterationContext& ctx, const char* what) {
    if (classify(ctx.pair) != Criticality::Supercritical)
        throw PreconditionViolation(std::string(what) + " requires a supercritical pair");
}
}  // namespace

QNormalizer::QNormalizer(const IterationContext& ctx, const ExtinctionResult& ext) {
    fa_prime_ = ctx.pair.a().pgf_derivative(ext.rho_ba, 1);
    fb_prime_ = ctx.pair.b().pgf_derivative(ext.rho_ab, 1);
}

double QNormalizer::gamma(long n) const {
    if (n < 0) throw ValidationError("gamma_n requires n >= 0");
    const long k = n / 2;
    double g = std::pow(fa_prime_ * fb_prime_, static_cast<double>(k));
    if (n % 2 == 1) g *= fa_prime_;
    return g;
}

double QNormalizer::gamma_prime(long n) const {
    if (n < 0) throw ValidationError("gamma'_n requires n >= 0");
    const long k = n / 2;
    double g = std::pow(fa_prime_ * fb_prime_, static_cast<double>(k));
    if (n % 2 == 1) g *= fb_prime_;
    return g;
}

Eigen::ArrayXd chebyshev_probes(double lo, double hi, int count) {
    Eigen::ArrayXd out(count);
    for (int i = 0; i < count; ++i) {
        const double t = std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * count));
        out[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
    }
    std::sort(out.data(), out.data() + out.size());
    return out;
}

double qn_eval(const IterationContext& ctx, long n, double s) {
    require_supercritical(ctx, "Q_n");
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    return (f_n_eval(ctx, n, s) - ext.rho_ab) / norm.gamma(n);
}

double qn_derivative(const IterationContext& ctx, long n, double s) {
    require_supercritical(ctx, "Q_n'");
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    // Chain rule through the alternating composition, innermost first.
    double x = s;
    double deriv = 1.0;
    for (long i = n - 1; i >= 0; --i) {
        const auto& mech = ctx.pair.at_generation(static_cast<std::size_t>(i));
        deriv *= mech.pgf_derivative(x, 1);
        x = mech.pgf(x);
    }
    return deriv / norm.gamma(n);
}

namespace {
// Iterates Q_{2k}(s) until the even-subsequence gap drops below tol.
// Returns the converged value and stores the horizon (in generations).
double q_even_limit(const IterationContext& ctx, const ExtinctionResult& ext,
                    const QNormalizer& norm, double s, double tol, long* horizon) {
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    const double rho = ext.rho_ab;
    const double step = norm.fa_prime() * norm.fb_prime();
    double x = s;
    double gamma = 1.0;
    double prev = (x - rho);
    double prev_gap = std::numeric_limits<double>::infinity();
    for (long k = 1; k <= kMaxDoubleSteps; ++k) {
        x = a.pgf(b.pgf(x));
        gamma *= step;
        if (gamma < kGammaUnderflow)
            throw NonConvergence("gamma_n underflow before the Q iteration met tolerance");
        const double cur = (x - rho) / gamma;
        const double gap = std::abs(cur - prev);
        const double scale = 1.0 + std::abs(cur);
        if (gap < tol * scale) {
            if (horizon) *horizon = 2 * k;
            return cur;
        }
        // Rounding in rho is amplified by 1/gamma, so the gap bottoms out and
        // then grows; accept the value at the noise floor.
        if (gap > prev_gap && prev_gap < 1e-7 * scale) {
            if (horizon) *horizon = 2 * (k - 1);
            return prev;
        }
        prev_gap = gap;
        prev = cur;
    }
    throw NonConvergence("Q iteration did not converge; last gap at horizon " +
                         std::to_string(2 * kMaxDoubleSteps));
}
}  // namespace

double q_value(const IterationContext& ctx, double s, double tol) {
    require_supercritical(ctx, "Q");
    if (s < 0.0 || s >= 1.0) throw DomainError("Q(s) requires s in [0,1)");
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    return q_even_limit(ctx, ext, norm, s, tol, nullptr);
}

double q_tilde_value(const IterationContext& ctx, double s, double tol) {
    require_supercritical(ctx, "QTilde");
    if (s < 0.0 || s >= 1.0) throw DomainError("QTilde(s) requires s in [0,1)");
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    // Q_{2k+1}(s) = Q_{2k}(f(a;s)) / f'(a;rho_ba).
    return q_even_limit(ctx, ext, norm, ctx.pair.a().pgf(s), tol, nullptr) / norm.fa_prime();
}

namespace {
LimitFunctionApprox probe_limit(const IterationContext& ctx, const Eigen::ArrayXd& probes,
                                double tol, bool tilde) {
    require_supercritical(ctx, tilde ? "QTilde" : "Q");
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    LimitFunctionApprox out;
    out.kind = tilde ? LimitKind::QTilde : LimitKind::Q;
    out.probes = probes;
    out.values.resize(probes.size());
    out.horizon = 0;
    for (Eigen::Index i = 0; i < probes.size(); ++i) {
        const double s = probes[i];
        if (s < 0.0 || s >= 1.0) throw DomainError("Q probes must lie in [0,1)");
        long h = 0;
        if (tilde)
            out.values[i] =
                q_even_limit(ctx, ext, norm, ctx.pair.a().pgf(s), tol, &h) / norm.fa_prime();
        else
            out.values[i] = q_even_limit(ctx, ext, norm, s, tol, &h);
        out.horizon = std::max(out.horizon, h);
    }
    return out;
}
}  // namespace

LimitFunctionApprox q_limit(const IterationContext& ctx, const Eigen::ArrayXd& probes,
                            double tol) {
    return probe_limit(ctx, probes, tol, false);
}

LimitFunctionApprox q_tilde_limit(const IterationContext& ctx, const Eigen::ArrayXd& probes,
                                  double tol) {
    return probe_limit(ctx, probes, tol, true);
}

QCoefficients q_coefficients(const IterationContext& ctx, Eigen::Index J, double tol,
                             long max_steps) {
    const auto& a = ctx.pair.a();
    const auto& b = ctx.pair.b();
    if (a.prob(0) != 0.0 || b.prob(0) != 0.0)
        throw PreconditionViolation("q coefficients require a_0 = b_0 = 0");
    const double a1 = a.prob(1), b1 = b.prob(1);
    if (!(a1 > 0.0 && a1 < 1.0) || !(b1 > 0.0 && b1 < 1.0))
        throw PreconditionViolation("q coefficients require a_1, b_1 in (0,1)");
    if (J < 1) throw ValidationError("J must be >= 1");

    // alpha(s) = f(a; f(b; s)) as an exact polynomial.
    const Eigen::Index alpha_deg = a.max_support() * b.max_support();
    const auto alpha_poly = compose_outer(a, TruncatedSeries::from_distribution(b),
                                          std::max<Eigen::Index>(J, alpha_deg));
    const auto a_poly = TruncatedSeries::from_distribution(a);

    TruncatedSeries even = TruncatedSeries::identity();
    Eigen::ArrayXd prev_q = Eigen::ArrayXd::Zero(J + 1);
    prev_q[1] = 1.0;
    double scale_even = 1.0;  // (a1 b1)^k
    for (long k = 1; k <= max_steps; ++k) {
        even = compose_with_poly(even, alpha_poly, J);
        scale_even *= a1 * b1;
        if (scale_even < kGammaUnderflow)
            throw NonConvergence("normalizer underflow in q-coefficient iteration");
        Eigen::ArrayXd cur_q = Eigen::ArrayXd::Zero(J + 1);
        const Eigen::Index upto = std::min<Eigen::Index>(J, even.degree());
        for (Eigen::Index j = 0; j <= upto; ++j) cur_q[j] = even.coeffs()[j] / scale_even;
        const double gap = (cur_q - prev_q).abs().maxCoeff();
        prev_q = cur_q;
        if (gap < tol) {
            // Odd subsequence from the same even iterate: f_{2k+1} = f_{2k} o f(a;.).
            const auto odd = compose_with_poly(even, a_poly, J);
            Eigen::ArrayXd qt = Eigen::ArrayXd::Zero(J + 1);
            const Eigen::Index upto_o = std::min<Eigen::Index>(J, odd.degree());
            for (Eigen::Index j = 0; j <= upto_o; ++j) qt[j] = odd.coeffs()[j] / (scale_even * a1);
            QCoefficients out{TruncatedSeries(std::move(cur_q), 0.0, false),
                              TruncatedSeries(std::move(qt), 0.0, false), k};
            return out;
        }
    }
    throw NonConvergence("q-coefficient iteration did not stabilize");
}

namespace {
double eval_limit(const IterationContext& ctx, const LimitFunctionApprox& approx, double s,
                  double tol, bool tilde) {
    if (approx.coefficients && s >= 0.0 && s < 1.0) {
        // Series interpolation; the truncation tail at s < 1 is negligible
        // for the degree used by q_coefficients.
        return approx.coefficients->eval_point(s);
    }
    return tilde ? q_tilde_value(ctx, s, tol) : q_value(ctx, s, tol);
}
}  // namespace

double functional_residual_q(const IterationContext& ctx, const LimitFunctionApprox& approx_q,
                             const LimitFunctionApprox& approx_qt, const Eigen::ArrayXd& probes) {
    const auto ext = extinction(ctx);
    const QNormalizer norm(ctx, ext);
    const double tol = 1e-11;
    double max_res = 0.0;
    for (Eigen::Index i = 0; i < probes.size(); ++i) {
        const double s = probes[i];
        const double lhs1 = eval_limit(ctx, approx_q, ctx.pair.a().pgf(s), tol, false);
        const double rhs1 = norm.fa_prime() * eval_limit(ctx, approx_qt, s, tol, true);
        const double lhs2 = eval_limit(ctx, approx_qt, ctx.pair.b().pgf(s), tol, true);
        const double rhs2 = norm.fb_prime() * eval_limit(ctx, approx_q, s, tol, false);
        max_res = std::max({max_res, std::abs(lhs1 - rhs1), std::abs(lhs2 - rhs2)});
    }
    return max_res;
}

double r_n_eval(const IterationContext& ctx, LimitKind kind, long n, double s) {
    if (kind != LimitKind::R && kind != LimitKind::RTilde)
        throw ValidationError("r_n_eval expects kind R or RTilde");
    if (s < 1.0) throw DomainError("R_n(s) is defined for s >= 1");
    const NormalizerTable table(ctx.pair);
    if (kind == LimitKind::R)
        return table.gamma(n) * (g_n_eval(ctx, IterOrder::ab, n, s) - 1.0);
    return table.gamma_tilde(n) * (g_n_eval(ctx, IterOrder::ba, n, s) - 1.0);
}

namespace {
double r_limit_at(const IterationContext& ctx, LimitKind kind, double s, double tol,
                  long* horizon) {
    require_supercritical(ctx, "R");
    const NormalizerTable table(ctx.pair);
    const bool tilde = (kind == LimitKind::RTilde);
    const auto& first = tilde ? ctx.pair.b() : ctx.pair.a();
    const auto& second = tilde ? ctx.pair.a() : ctx.pair.b();
    double x = s;
    double prev = std::numeric_limits<double>::infinity();
    for (long n = 1; n <= 2 * kMaxDoubleSteps; ++n) {
        x = g_eval((n % 2 == 1) ? first : second, x, ctx.tolerance);
        const double gamma_n = tilde ? table.gamma_tilde(n) : table.gamma(n);
        const double cur = gamma_n * (x - 1.0);
        // The sequence is nonincreasing; a noticeable increase signals an
        // inverse-solver defect.
        if (cur > prev + 1e-9 * (1.0 + std::abs(prev)) + gamma_n * 1e-14)
            throw MonotonicityViolation("R_n increased between iterates");
        if (std::abs(prev - cur) < tol) {
            if (horizon) *horizon = n;
            return cur;
        }
        prev = cur;
    }
    throw NonConvergence("R iteration did not converge");
}
}  // namespace

double r_value(const IterationContext& ctx, LimitKind kind, double s, double tol) {
    return r_limit_at(ctx, kind, s, tol, nullptr);
}

LimitFunctionApprox r_limit(const IterationContext& ctx, LimitKind kind,
                            const Eigen::ArrayXd& probes, double tol) {
    LimitFunctionApprox out;
    out.kind = kind;
    out.probes = probes;
    out.values.resize(probes.size());
    for (Eigen::Index i = 0; i < probes.size(); ++i) {
        long h = 0;
        out.values[i] = r_limit_at(ctx, kind, probes[i], tol, &h);
        out.horizon = std::max(out.horizon, h);
    }
    return out;
}

double mgf_wn(const IterationContext& ctx, long n, double theta) {
    const NormalizerTable table(ctx.pair);
    const double s = std::exp(theta / table.gamma(n));
    const double v = f_n_eval(ctx, n, s);
    if (!std::isfinite(v)) throw OverflowError("MGF evaluation overflowed");
    return v;
}

Theta1Bound theta1_bound(const IterationContext& ctx, double s0, long N) {
    if (!(s0 > 1.0)) throw ValidationError("theta1_bound requires s0 > 1");
    if (N < 1) throw ValidationError("theta1_bound requires N >= 1");
    const NormalizerTable table(ctx.pair);
    Theta1Bound out;
    out.sequence.resize(N);
    double x = s0;  // g_{n-1}(ba; s0), starting at g_0 = id
    double min_v = std::numeric_limits<double>::infinity();
    for (long n = 1; n <= N; ++n) {
        out.sequence[n - 1] = table.gamma(n) * std::log(x);
        min_v = std::min(min_v, out.sequence[n - 1]);
        x = g_eval((n % 2 == 1) ? ctx.pair.b() : ctx.pair.a(), x, ctx.tolerance);
    }
    out.theta1 = min_v;
    out.limit_value = ctx.pair.a().mean() * r_value(ctx, LimitKind::RTilde, s0);
    if (!(out.theta1 > 0.0)) throw NonConvergence("theta_1 bound is not positive");
    return out;
}

}  // namespace gwc
