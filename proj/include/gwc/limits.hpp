#ifndef GWC_LIMITS_HPP
#define GWC_LIMITS_HPP

#include <optional>

#include "gwc/iterate.hpp"
#include "gwc/moments.hpp"

namespace gwc {

/// Normalizer gamma_n of the extinction-rate functions: products of
/// f'(a;rho_ba) and f'(b;rho_ab), odd steps ending on the a-side factor.
class QNormalizer {
public:
    QNormalizer(const IterationContext& ctx, const ExtinctionResult& ext);

    double fa_prime() const { return fa_prime_; }  // f'(a; rho_ba)
    double fb_prime() const { return fb_prime_; }  // f'(b; rho_ab)
    double gamma(long n) const;
    /// ba-ordered analogue (roles swapped, odd steps end on the b-side).
    double gamma_prime(long n) const;

private:
    double fa_prime_;
    double fb_prime_;
};

enum class LimitKind { Q, QTilde, R, RTilde };

struct LimitFunctionApprox {
    LimitKind kind = LimitKind::Q;
    Eigen::ArrayXd probes;
    Eigen::ArrayXd values;
    std::optional<TruncatedSeries> coefficients;
    long horizon = 0;  // iterate count at which every probe met tolerance
};

/// 17 Chebyshev-spaced probe points on [lo, hi].
Eigen::ArrayXd chebyshev_probes(double lo, double hi, int count = 17);

/// Q_n(s) = (f_n(ab;s) - rho_ab)/gamma_n.
double qn_eval(const IterationContext& ctx, long n, double s);

/// d/ds Q_n(s) = f_n'(ab;s)/gamma_n (chain-rule product); cross-check route
/// for finite-difference derivatives of the limit.
double qn_derivative(const IterationContext& ctx, long n, double s);

/// Pointwise limits of the even / odd normalized iterates.
double q_value(const IterationContext& ctx, double s, double tol = 1e-10);
double q_tilde_value(const IterationContext& ctx, double s, double tol = 1e-10);

LimitFunctionApprox q_limit(const IterationContext& ctx, const Eigen::ArrayXd& probes,
                            double tol = 1e-10);
LimitFunctionApprox q_tilde_limit(const IterationContext& ctx, const Eigen::ArrayXd& probes,
                                  double tol = 1e-10);

struct QCoefficients {
    TruncatedSeries q;        // q_1..q_J as series coefficients (q_0 = 0)
    TruncatedSeries q_tilde;  // same for the odd subsequence
    long horizon = 0;         // number of two-generation steps used
};

/// Coefficients of lim f_{2n}(ab;s)/(a_1 b_1)^n up to degree J
/// (requires a_0 = b_0 = 0 and a_1, b_1 in (0,1)); the odd analogue is
/// normalized by (a_1 b_1)^n a_1.
QCoefficients q_coefficients(const IterationContext& ctx, Eigen::Index J, double tol = 1e-10,
                             long max_steps = 200);

/// Max over probes of |Q(f(a;s)) - f'(a;rho_ba) Qt(s)| and
/// |Qt(f(b;s)) - f'(b;rho_ab) Q(s)|, evaluating the limit functions
/// pointwise (coefficient series are used when the approximations carry
/// them and the argument is inside [0,1)).
double functional_residual_q(const IterationContext& ctx, const LimitFunctionApprox& approx_q,
                             const LimitFunctionApprox& approx_qt, const Eigen::ArrayXd& probes);

/// R_n(s) = Gamma_n (g_n(ab;s) - 1); RTilde uses Gamma-tilde and the ba
/// inverse iterates.
double r_n_eval(const IterationContext& ctx, LimitKind kind, long n, double s);

double r_value(const IterationContext& ctx, LimitKind kind, double s, double tol = 1e-8);

LimitFunctionApprox r_limit(const IterationContext& ctx, LimitKind kind,
                            const Eigen::ArrayXd& probes, double tol = 1e-8);

/// E[exp(theta W_n) | Z_0=1] = f_n(ab; exp(theta/Gamma_n)).
double mgf_wn(const IterationContext& ctx, long n, double theta);

struct Theta1Bound {
    double theta1 = 0.0;        // min over 1 <= n <= N of Gamma_n log g_{n-1}(ba;s0)
    double limit_value = 0.0;   // m_a * RTilde(s0), the tail of the sequence
    Eigen::ArrayXd sequence;    // the per-n values
};

/// Uniform-MGF exponent: theta_1 = inf_n Gamma_n log g_{n-1}(ba;s0), the tail
/// certified by convergence of the sequence to m_a * RTilde(s0).
Theta1Bound theta1_bound(const IterationContext& ctx, double s0, long N);

}  // namespace gwc

#endif
