#ifndef GWC_DEVIATION_HPP
#define GWC_DEVIATION_HPP

#include "gwc/limits.hpp"

namespace gwc {

struct ChernoffRate {
    double epsilon = 0.0;
    double lambda = 0.0;      // max of the active branch minima; 0 means phi == 0
    double alpha_star = 1.0;  // upper-branch minimizer (> 1), 1 when inactive
    double beta_star = 1.0;   // lower-branch minimizer in (0,1), 1 when inactive
    bool upper_active = false;
    bool lower_active = false;
    // Branch values at the minimizers; phi(k,eps) <= upper^k + lower^k.
    double upper_value = 0.0;
    double lower_value = 0.0;
};

struct DeviationReport {
    long n = 0;
    double exact = 0.0;            // P(|Z_{n+1}/Z_n - omega_n| > eps | Z_0=1)
    double normalized = 0.0;       // exact divided by the generation normalizer
    double tail_bound = 0.0;       // certified bound on mass not summed exactly
    double chernoff_bound = 0.0;   // 0 when not computed
};

struct LimitSumResult {
    double value = 0.0;
    double tail_certificate = 0.0;
    Eigen::Index terms = 0;
    bool certificate_geometric = true;  // false: weaker Cauchy-style certificate
};

/// Exact P(|S_k/k - m| > eps) for S_k the sum of k iid draws, by k-fold
/// self-convolution; strict inequality.
double phi_exact(const OffspringDistribution& dist, long k, double epsilon);

/// phi_exact for every k = 1..k_max in one convolution sweep.
Eigen::ArrayXd phi_table(const OffspringDistribution& dist, long k_max, double epsilon);

/// Optimized two-sided Chernoff rate: alpha* minimizes a^{-(m+eps)} f(a) over
/// (1, inf), beta* minimizes b^{-(m-eps)} f(b) over (0,1); guarantees
/// phi(k,eps) <= 2 lambda^k.
ChernoffRate chernoff_rate(const OffspringDistribution& dist, double epsilon);

/// Exact one-step ratio deviation at generation n: sum_j P(Z_n=j) phi(j,eps)
/// with phi from the mechanism active at step n. Requires a_0 = b_0 = 0.
DeviationReport ratio_deviation_exact(const IterationContext& ctx, long n, double epsilon,
                                      Eigen::Index degree_cap = kDefaultDegreeCap);

/// Reports for n = 0..n_max sharing one distribution scan.
std::vector<DeviationReport> ratio_deviation_scan(const IterationContext& ctx, long n_max,
                                                  double epsilon,
                                                  Eigen::Index degree_cap = kDefaultDegreeCap);

enum class Side { a, b };

/// sum_j phi(j,eps) q_j (side a) or phi_b(j,eps) qt_j (side b), truncated at
/// J terms with a Chernoff-certified tail.
LimitSumResult limit_sum(const IterationContext& ctx, double epsilon, Side side, Eigen::Index J,
                         double tail_tol);

struct QkIntegral {
    double value = 0.0;
    double error_estimate = 0.0;
    double last_block_ratio = 0.0;
    int blocks = 0;
};

/// Quadrature of Q(s) |log s|^{r-1} / s over (0,1): series form near 0,
/// geometric blocks toward 1 with the block-ratio divergence check.
QkIntegral qk_integral(const IterationContext& ctx, double r, int quad_points = 64);

/// Corollary-style rate condition: a_1 m_a^r > 1 and b_1 m_b^r > 1.
bool moment_condition_check(const MechanismSchedule& pair, double r, double delta);

}  // namespace gwc

#endif
