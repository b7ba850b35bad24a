#ifndef GWC_MONTECARLO_HPP
#define GWC_MONTECARLO_HPP

#include <cstdint>

#include "gwc/moments.hpp"

namespace gwc {

/// Counter-based splittable generator: a fixed-size key stream whose draws
/// depend only on (seed, path, generation, counter), never on execution
/// order. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t generation);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~static_cast<result_type>(0); }

    result_type operator()();

    /// Uniform double in [0,1).
    double uniform();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Vose alias table for O(1) draws from a finite-support distribution.
class AliasTable {
public:
    explicit AliasTable(const OffspringDistribution& dist);
    Eigen::Index sample(CounterRng& rng) const;

private:
    std::vector<double> prob_;
    std::vector<Eigen::Index> alias_;
};

struct SimConfig {
    MechanismSchedule schedule;
    long n_max = 1;
    long paths = 1;
    std::uint64_t seed = 0;
    long z0 = 1;
    double draw_budget = 1e9;  // total offspring draws across all paths

    SimConfig(MechanismSchedule sched, long n, long p, std::uint64_t s, long z = 1)
        : schedule(std::move(sched)), n_max(n), paths(p), seed(s), z0(z) {
        if (n_max < 1 || paths < 1 || z0 < 0)
            throw ValidationError("SimConfig requires n_max >= 1, paths >= 1, z0 >= 0");
    }
};

struct PathEnsemble {
    SimConfig config;
    Eigen::MatrixXd trajectories;  // paths x (n_max+1), integer-valued
    Eigen::MatrixXd w_values;      // Z_n / Gamma_n
    Eigen::ArrayXd gammas;         // Gamma_0..Gamma_{n_max}
};

/// Simulate the schedule forward; absorbing at 0; deterministic in
/// (seed, config) regardless of GWC_THREADS.
PathEnsemble simulate(const SimConfig& config);

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
    long events = 0;
    long sample_size = 0;
};

/// Fraction of paths with |Z_{n+1}/Z_n - omega_n| > eps. Requires the
/// schedule to have no deaths (p_0 = 0 everywhere) so the ratio is defined.
Estimate estimate_ratio_deviation(const PathEnsemble& ensemble, long n, double epsilon);

/// P(|W_n - W| > eps) with W replaced by the proxy W_N.
Estimate estimate_w_deviation(const PathEnsemble& ensemble, long n, double epsilon,
                              long proxy_horizon);

/// P(|Z_{n+1}/Z_n - omega_n| > eps | W >= delta) with W-proxy conditioning.
Estimate estimate_conditional_deviation(const PathEnsemble& ensemble, long n, double epsilon,
                                        double delta, long proxy_horizon);

struct WMoments {
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
    Eigen::ArrayXd thetas;
    Eigen::ArrayXd mgf;  // sample E[exp(theta W_n)]
};

WMoments empirical_w_moments(const PathEnsemble& ensemble, long n,
                             const Eigen::ArrayXd& thetas = Eigen::ArrayXd());

/// Fraction of paths extinct (Z_n = 0) at generation n.
Estimate extinction_frequency(const PathEnsemble& ensemble, long n);

/// Worker count: GWC_THREADS if set (>=1), else hardware concurrency.
int thread_count();

}  // namespace gwc

#endif
