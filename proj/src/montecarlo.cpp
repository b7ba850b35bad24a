#include "gwc/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace gwc {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t generation) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ splitmix64(path + 0x7f4a7c15ULL));
    k = splitmix64(k ^ splitmix64(generation + 0x1ce4e5b9ULL));
    key_ = k;
}

CounterRng::result_type CounterRng::operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

double CounterRng::uniform() {
    // 53 random bits into [0,1).
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

AliasTable::AliasTable(const OffspringDistribution& dist) {
    if (!dist.exact()) throw PreconditionViolation("alias table requires exact finite support");
    const Eigen::Index n = dist.probs().size();
    prob_.assign(static_cast<std::size_t>(n), 0.0);
    alias_.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> scaled(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) scaled[static_cast<std::size_t>(i)] = dist.probs()[i] * n;
    std::vector<Eigen::Index> small, large;
    for (Eigen::Index i = 0; i < n; ++i)
        (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
        const Eigen::Index s = small.back();
        small.pop_back();
        const Eigen::Index l = large.back();
        prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
        if (scaled[static_cast<std::size_t>(l)] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (const Eigen::Index i : large) prob_[static_cast<std::size_t>(i)] = 1.0;
    for (const Eigen::Index i : small) prob_[static_cast<std::size_t>(i)] = 1.0;
}

Eigen::Index AliasTable::sample(CounterRng& rng) const {
    const double u = rng.uniform() * static_cast<double>(prob_.size());
    auto i = static_cast<Eigen::Index>(u);
    if (i >= static_cast<Eigen::Index>(prob_.size()))
        i = static_cast<Eigen::Index>(prob_.size()) - 1;
    const double frac = u - static_cast<double>(i);
    return frac < prob_[static_cast<std::size_t>(i)] ? i : alias_[static_cast<std::size_t>(i)];
}

int thread_count() {
    if (const char* env = std::getenv("GWC_THREADS")) {
        const long t = std::strtol(env, nullptr, 10);
        if (t >= 1) return static_cast<int>(t);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {
constexpr long kBatchThreshold = 10000;  // switch to multinomial counts above this

long step_population(long z, const OffspringDistribution& mech, const AliasTable& table,
                     CounterRng& rng, std::atomic<long long>& draws_left) {
    if (z == 0) return 0;
    if (z > kBatchThreshold) {
        // Multinomial via sequential binomial conditioning: exact, and only
        // one draw per support point.
        const Eigen::Index K = mech.probs().size();
        if (draws_left.fetch_sub(K) < K) throw ResourceBudget("draw budget exhausted");
        long remaining = z;
        double mass = 1.0;
        long long next = 0;
        for (Eigen::Index j = 0; j < K && remaining > 0; ++j) {
            const double pj = mech.probs()[j];
            if (pj <= 0.0) continue;
            long c;
            if (mass - pj <= 1e-15) {
                c = remaining;  // last support point takes the rest
            } else {
                std::binomial_distribution<long> bin(remaining, std::min(1.0, pj / mass));
                c = bin(rng);
            }
            next += static_cast<long long>(c) * j;
            remaining -= c;
            mass -= pj;
        }
        return static_cast<long>(next);
    }
    if (draws_left.fetch_sub(z) < z) throw ResourceBudget("draw budget exhausted");
    long long next = 0;
    for (long i = 0; i < z; ++i) next += table.sample(rng);
    return static_cast<long>(next);
}
}  // namespace

PathEnsemble simulate(const SimConfig& config) {
    const auto& sched = config.schedule;
    std::vector<AliasTable> tables;
    tables.reserve(sched.size());
    for (std::size_t i = 0; i < sched.size(); ++i) tables.emplace_back(sched.mechanism(i));

    PathEnsemble out{config,
                     Eigen::MatrixXd(config.paths, config.n_max + 1),
                     Eigen::MatrixXd(config.paths, config.n_max + 1),
                     Eigen::ArrayXd(config.n_max + 1)};
    NormalizerTable norms(sched);
    for (long n = 0; n <= config.n_max; ++n) out.gammas[n] = norms.gamma(n);

    std::atomic<long long> draws_left{static_cast<long long>(config.draw_budget)};
    std::atomic<bool> budget_blown{false};

    const auto run_range = [&](long lo, long hi) {
        try {
            for (long p = lo; p < hi; ++p) {
                long z = config.z0;
                out.trajectories(p, 0) = static_cast<double>(z);
                for (long n = 0; n < config.n_max; ++n) {
                    CounterRng rng(config.seed, static_cast<std::uint64_t>(p),
                                   static_cast<std::uint64_t>(n));
                    z = step_population(z, sched.at_generation(static_cast<std::size_t>(n)),
                                        tables[static_cast<std::size_t>(n) % tables.size()], rng,
                                        draws_left);
                    out.trajectories(p, n + 1) = static_cast<double>(z);
                }
            }
        } catch (const ResourceBudget&) {
            budget_blown = true;
        }
    };

    const int workers = std::min<long>(thread_count(), config.paths);
    if (workers <= 1) {
        run_range(0, config.paths);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (config.paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const long lo = w * chunk;
            const long hi = std::min<long>(config.paths, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    if (budget_blown) throw ResourceBudget("simulation exceeded the configured draw budget");

    for (long n = 0; n <= config.n_max; ++n)
        out.w_values.col(n) = out.trajectories.col(n) / out.gammas[n];
    return out;
}

namespace {
Estimate binomial_estimate(long events, long total) {
    Estimate e;
    e.events = events;
    e.sample_size = total;
    if (total > 0) {
        e.value = static_cast<double>(events) / static_cast<double>(total);
        e.standard_error = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(total));
    }
    return e;
}

void require_alive_ratio(const PathEnsemble& ensemble, long n, const char* what) {
    const auto& sched = ensemble.config.schedule;
    for (std::size_t i = 0; i < sched.size(); ++i)
        if (sched.mechanism(i).prob(0) != 0.0)
            throw PreconditionViolation(std::string(what) +
                                        " requires p_0 = 0 in every mechanism (ratio undefined "
                                        "on extinct paths)");
    if (n + 1 > ensemble.config.n_max)
        throw ValidationError(std::string(what) + " requires n + 1 <= n_max");
}

bool ratio_event(const PathEnsemble& ensemble, long p, long n, double epsilon) {
    const double zn = ensemble.trajectories(p, n);
    const double znext = ensemble.trajectories(p, n + 1);
    const double omega =
        ensemble.config.schedule.at_generation(static_cast<std::size_t>(n)).mean();
    return std::abs(znext / zn - omega) > epsilon;
}

void require_proxy(const PathEnsemble& ensemble, long n, long proxy_horizon, const char* what) {
    if (proxy_horizon > ensemble.config.n_max || proxy_horizon <= n)
        throw ValidationError(std::string(what) + " requires n < proxy_horizon <= n_max");
    const double gn = ensemble.gammas[n];
    const double gN = ensemble.gammas[proxy_horizon];
    if (gN < 1e4 || gN / gn < 100.0)
        throw ProxyTooClose(std::string(what) +
                            ": proxy horizon too close (needs Gamma_N >= 1e4 and "
                            "Gamma_N/Gamma_n >= 100)");
}
}  // namespace

Estimate estimate_ratio_deviation(const PathEnsemble& ensemble, long n, double epsilon) {
    require_alive_ratio(ensemble, n, "estimate_ratio_deviation");
    long events = 0;
    for (long p = 0; p < ensemble.config.paths; ++p)
        if (ratio_event(ensemble, p, n, epsilon)) ++events;
    return binomial_estimate(events, ensemble.config.paths);
}

Estimate estimate_w_deviation(const PathEnsemble& ensemble, long n, double epsilon,
                              long proxy_horizon) {
    require_proxy(ensemble, n, proxy_horizon, "estimate_w_deviation");
    long events = 0;
    for (long p = 0; p < ensemble.config.paths; ++p)
        if (std::abs(ensemble.w_values(p, n) - ensemble.w_values(p, proxy_horizon)) > epsilon)
            ++events;
    return binomial_estimate(events, ensemble.config.paths);
}

Estimate estimate_conditional_deviation(const PathEnsemble& ensemble, long n, double epsilon,
                                        double delta, long proxy_horizon) {
    require_alive_ratio(ensemble, n, "estimate_conditional_deviation");
    require_proxy(ensemble, n, proxy_horizon, "estimate_conditional_deviation");
    long qualifying = 0, events = 0;
    for (long p = 0; p < ensemble.config.paths; ++p) {
        if (ensemble.w_values(p, proxy_horizon) < delta) continue;
        ++qualifying;
        if (ratio_event(ensemble, p, n, epsilon)) ++events;
    }
    if (qualifying < 200)
        throw UnderpoweredCondition(
            "fewer than 200 paths satisfy the conditioning event W >= delta");
    return binomial_estimate(events, qualifying);
}

WMoments empirical_w_moments(const PathEnsemble& ensemble, long n, const Eigen::ArrayXd& thetas) {
    if (n < 0 || n > ensemble.config.n_max)
        throw ValidationError("empirical_w_moments requires 0 <= n <= n_max");
    const auto w = ensemble.w_values.col(n).array();
    const auto P = static_cast<double>(ensemble.config.paths);
    WMoments out;
    out.mean = w.mean();
    const Eigen::ArrayXd centered = w - out.mean;
    const double m2 = centered.square().sum() / P;
    const double m4 = centered.square().square().sum() / P;
    out.variance = P > 1 ? m2 * P / (P - 1.0) : 0.0;
    out.mean_se = std::sqrt(m2 / P);
    // Var(sample variance) ~ (m4 - m2^2)/P.
    out.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / P);
    out.thetas = thetas;
    out.mgf.resize(thetas.size());
    for (Eigen::Index i = 0; i < thetas.size(); ++i)
        out.mgf[i] = (thetas[i] * w).exp().mean();
    return out;
}

Estimate extinction_frequency(const PathEnsemble& ensemble, long n) {
    if (n < 0 || n > ensemble.config.n_max)
        throw ValidationError("extinction_frequency requires 0 <= n <= n_max");
    long events = 0;
    for (long p = 0; p < ensemble.config.paths; ++p)
        if (ensemble.trajectories(p, n) == 0.0) ++events;
    return binomial_estimate(events, ensemble.config.paths);
}

}  // namespace gwc
