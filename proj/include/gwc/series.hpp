#ifndef GWC_SERIES_HPP
#define GWC_SERIES_HPP

#include <Eigen/Dense>

#include "gwc/offspring.hpp"

namespace gwc {

/// Default degree cap for truncated-series work.
inline constexpr Eigen::Index kDefaultDegreeCap = 4096;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Power-series coefficients c_0..c_D with a certified bound on the mass
/// beyond degree D. The low-order coefficients stay exact under truncation;
/// the exact flag records whether the whole series is lossless.
class TruncatedSeries {
public:
    TruncatedSeries(Eigen::ArrayXd coeffs, double tail_bound, bool exact);

    /// The identity series s (c_1 = 1).
    static TruncatedSeries identity();
    /// The polynomial of a finite-support distribution.
    static TruncatedSeries from_distribution(const OffspringDistribution& dist);

    const Eigen::ArrayXd& coeffs() const { return coeffs_; }
    Eigen::Index degree() const { return coeffs_.size() - 1; }
    double tail_bound() const { return tail_bound_; }
    bool exact() const { return exact_; }

    double coefficient(Eigen::Index j) const;
    double sum() const { return coeffs_.sum(); }

    /// [lo, hi] enclosure of the series value at s in [0,1].
    Interval eval(double s) const;
    double eval_point(double s) const { return eval(s).lo; }

    /// Termwise derivative; requires an exact series.
    TruncatedSeries differentiate() const;

    /// Mean and variance of the represented probability distribution
    /// (exact series only).
    double distribution_mean() const;
    double distribution_variance() const;

private:
    Eigen::ArrayXd coeffs_;
    double tail_bound_;
    bool exact_;
};

/// Coefficients of sum_j outer.p_j * inner(s)^j up to degree_cap.
/// Coefficients at degree <= cap are exact; if the full composition would
/// exceed the cap the result is flagged inexact with tail_bound = 1 - sum(c)
/// (valid for probability series). An inner series with positive constant
/// term inherits a conservative tail bound and loses the exact flag.
TruncatedSeries compose_outer(const OffspringDistribution& outer,
                              const TruncatedSeries& inner,
                              Eigen::Index degree_cap = kDefaultDegreeCap);

/// outer(poly(s)) for a series outer and a low-degree exact polynomial:
/// the forward route for scanning generation distributions.
TruncatedSeries compose_with_poly(const TruncatedSeries& outer,
                                  const TruncatedSeries& poly,
                                  Eigen::Index degree_cap = kDefaultDegreeCap);

/// Exact polynomial product of two distributions' PGFs realized in
/// coefficient space (plain convolution).
Eigen::ArrayXd convolve(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v);

void dump_series_csv(const TruncatedSeries& series, std::ostream& out);

}  // namespace gwc

#endif
