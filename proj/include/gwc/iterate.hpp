#ifndef GWC_ITERATE_HPP
#define GWC_ITERATE_HPP

#include "gwc/series.hpp"

namespace gwc {

/// Pair context for generating-function iteration.
struct IterationContext {
    MechanismSchedule pair;
    double tolerance = 1e-12;
    int max_iter = 100000;

    IterationContext(MechanismSchedule schedule, double tol = 1e-12, int max_it = 100000)
        : pair(std::move(schedule)), tolerance(tol), max_iter(max_it) {
        pair.require_pair("IterationContext");
        if (!(tolerance > 0.0) || max_iter < 1)
            throw ValidationError("IterationContext requires tolerance > 0 and max_iter >= 1");
    }
};

struct ExtinctionResult {
    double rho_a = 1.0;
    double rho_b = 1.0;
    double rho_ab = 1.0;
    double rho_ba = 1.0;
    Criticality regime = Criticality::Critical;
};

/// n-fold alternating composition: f_0 = id, f_{2k+1}(s) = f_{2k}(f(a;s)),
/// f_{2k+2}(s) = f_{2k+1}(f(b;s)). Equivalently f_n applies the generation
/// n-1 mechanism innermost and the generation-0 mechanism outermost.
double f_n_eval(const IterationContext& ctx, long n, double s);

/// k-fold iterate of alpha(s) = f(a; f(b; s)); alpha_k = f_{2k}.
double alpha_eval(const IterationContext& ctx, long k, double s);
/// k-fold iterate of beta(s) = f(b; f(a; s)).
double beta_eval(const IterationContext& ctx, long k, double s);

/// Extinction probabilities: smallest fixed points of f(a;.), f(b;.),
/// alpha and beta, cross-validated by direct iteration of alpha at 0.
ExtinctionResult extinction(const IterationContext& ctx);

/// Exact distribution of Z_n given Z_0 = 1 as a truncated series; built by
/// repeated compose_outer starting from the identity series.
TruncatedSeries zn_distribution(const IterationContext& ctx, long n,
                                Eigen::Index degree_cap = kDefaultDegreeCap);

/// Scan helper: distributions of Z_0..Z_n in one forward pass
/// (series composed with the alternating mechanism polynomials).
std::vector<TruncatedSeries> zn_distribution_scan(const IterationContext& ctx, long n_max,
                                                  Eigen::Index degree_cap = kDefaultDegreeCap);

/// Inverse PGF: the unique g >= 0 with f(dist; g) = s. Requires p_0 = 0 and
/// p_1 > 0 so f is strictly increasing from 0 on [0, inf).
double g_eval(const OffspringDistribution& dist, double s, double tol = 1e-12);

enum class IterOrder { ab, ba };

/// Alternating inverse iterate: g_1(ab;s) = g(a;s),
/// g_{2n}(ab;s) = g(b; g_{2n-1}(ab;s)), g_{2n+1}(ab;s) = g(a; g_{2n}(ab;s));
/// the ba order swaps the roles. Inverse of f_n in the matching order.
double g_n_eval(const IterationContext& ctx, IterOrder order, long n, double s);

}  // namespace gwc

#endif
