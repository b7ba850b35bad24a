#ifndef GWC_OFFSPRING_HPP
#define GWC_OFFSPRING_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gwc/errors.hpp"

namespace gwc {

struct MomentSummary {
    double mean = 0.0;
    double second_factorial_moment = 0.0;  // f''(1)
    double variance = 0.0;
};

/// A finite-support offspring distribution p_0..p_K with an optional
/// recorded tail mass for distributions truncated by the caller.
class OffspringDistribution {
public:
    // probs[j] = P(offspring = j). Requires p_j >= 0 and
    // sum(p_j) + tail_mass = 1 within 1e-12.
    explicit OffspringDistribution(Eigen::ArrayXd probs, double tail_mass = 0.0);
    OffspringDistribution(std::initializer_list<double> probs);

    static OffspringDistribution from_json_text(const std::string& text);

    const Eigen::ArrayXd& probs() const { return probs_; }
    double prob(Eigen::Index j) const {
        return (j >= 0 && j < probs_.size()) ? probs_[j] : 0.0;
    }
    Eigen::Index max_index() const { return probs_.size() - 1; }
    double tail_mass() const { return tail_mass_; }
    bool exact() const { return tail_mass_ == 0.0; }

    // Smallest j with p_j > 0, largest j with p_j > 0.
    Eigen::Index min_support() const;
    Eigen::Index max_support() const;

    /// f(s) = sum_j p_j s^j. For s > 1 the value is only certifiable for
    /// exact finite support.
    double pgf(double s) const;
    /// Exact first or second derivative of the polynomial PGF, s in [0,1].
    double pgf_derivative(double s, int order) const;

    MomentSummary moments() const;
    double mean() const { return mean_; }

private:
    Eigen::ArrayXd probs_;
    double tail_mass_;
    double mean_;
};

/// Ordered cycle of mechanisms; length 2 for the analytic a*b theory,
/// arbitrary length for simulation.
class MechanismSchedule {
public:
    explicit MechanismSchedule(std::vector<OffspringDistribution> mechanisms);

    static MechanismSchedule from_json_text(const std::string& text);

    std::size_t size() const { return mechanisms_.size(); }
    const OffspringDistribution& mechanism(std::size_t i) const { return mechanisms_.at(i); }
    /// Mechanism active at generation n (n mod period).
    const OffspringDistribution& at_generation(std::size_t n) const {
        return mechanisms_[n % mechanisms_.size()];
    }
    const OffspringDistribution& a() const;
    const OffspringDistribution& b() const;
    void require_pair(const char* what) const;

private:
    std::vector<OffspringDistribution> mechanisms_;
};

enum class Criticality { Subcritical, Critical, Supercritical };

const char* to_string(Criticality c);

/// Regime of a length-2 schedule by the sign of m_a*m_b - 1
/// (equality tolerance 1e-12).
Criticality classify(const MechanismSchedule& pair);

/// Smallest nonnegative root of pgf(s) = s on [0,1] for a convex increasing
/// map fixing 1. Returns exactly 1 when derivative_at_one <= 1; otherwise
/// bisection (with a Newton-style midpoint accelerator would be redundant;
/// plain bisection brackets unconditionally) to |hi-lo| <= tol.
double smallest_fixed_point(const std::function<double(double)>& pgf,
                            double derivative_at_one,
                            double tol = 1e-12,
                            int max_iter = 200);

}  // namespace gwc

#endif
