#include "gwc/series.hpp"

#include <cmath>
#include <ostream>

#include "gwc/errors.hpp"

namespace gwc {

namespace {
// Polynomial product truncated at degree cap. Coefficients <= cap of the
// full product depend only on coefficients <= cap of the factors, so the
// kept range is exact. Returns whether anything was cut.
Eigen::ArrayXd multiply_truncated(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v,
                                  Eigen::Index cap, bool* truncated) {
    const Eigen::Index full_deg = (u.size() - 1) + (v.size() - 1);
    const Eigen::Index out_deg = std::min(full_deg, cap);
    if (truncated && full_deg > cap) *truncated = true;
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(out_deg + 1);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double ui = u[i];
        if (ui == 0.0) continue;
        const Eigen::Index jmax = std::min<Eigen::Index>(v.size() - 1, out_deg - i);
        for (Eigen::Index j = 0; j <= jmax; ++j) out[i + j] += ui * v[j];
    }
    return out;
}
}  // namespace

TruncatedSeries::TruncatedSeries(Eigen::ArrayXd coeffs, double tail_bound, bool exact)
    : coeffs_(std::move(coeffs)), tail_bound_(tail_bound), exact_(exact) {
    if (coeffs_.size() == 0) throw ValidationError("series needs at least the constant coefficient");
    if (tail_bound_ < 0.0) throw ValidationError("negative tail bound");
    if (exact_ && tail_bound_ != 0.0)
        throw ValidationError("exact series must have zero tail bound");
}

TruncatedSeries TruncatedSeries::identity() {
    Eigen::ArrayXd c = Eigen::ArrayXd::Zero(2);
    c[1] = 1.0;
    return TruncatedSeries(std::move(c), 0.0, true);
}

TruncatedSeries TruncatedSeries::from_distribution(const OffspringDistribution& dist) {
    return TruncatedSeries(dist.probs(), dist.tail_mass(), dist.exact());
}

double TruncatedSeries::coefficient(Eigen::Index j) const {
    if (j < 0 || j >= coeffs_.size())
        throw IndexOutOfRange("coefficient index " + std::to_string(j) + " exceeds degree " +
                              std::to_string(degree()));
    return coeffs_[j];
}

Interval TruncatedSeries::eval(double s) const {
    if (s < 0.0 || s > 1.0) throw DomainError("series eval requires s in [0,1]");
    double acc = 0.0;
    for (Eigen::Index j = coeffs_.size() - 1; j >= 0; --j) acc = acc * s + coeffs_[j];
    // All truncated mass sits at degrees > D, so it contributes at most
    // tail_bound * s^D.
    const double tail = exact_ ? 0.0 : tail_bound_ * std::pow(s, static_cast<double>(degree()));
    return {acc, acc + tail};
}

TruncatedSeries TruncatedSeries::differentiate() const {
    if (!exact_) throw PreconditionViolation("cannot differentiate an inexact series");
    if (coeffs_.size() == 1) return TruncatedSeries(Eigen::ArrayXd::Zero(1), 0.0, true);
    Eigen::ArrayXd out(coeffs_.size() - 1);
    for (Eigen::Index j = 1; j < coeffs_.size(); ++j)
        out[j - 1] = static_cast<double>(j) * coeffs_[j];
    return TruncatedSeries(std::move(out), 0.0, true);
}

double TruncatedSeries::distribution_mean() const {
    if (!exact_) throw PreconditionViolation("mean of a truncated distribution is not exact");
    double m = 0.0;
    for (Eigen::Index j = 1; j < coeffs_.size(); ++j) m += static_cast<double>(j) * coeffs_[j];
    return m;
}

double TruncatedSeries::distribution_variance() const {
    if (!exact_) throw PreconditionViolation("variance of a truncated distribution is not exact");
    double m = 0.0, m2 = 0.0;
    for (Eigen::Index j = 1; j < coeffs_.size(); ++j) {
        const double jd = static_cast<double>(j);
        m += jd * coeffs_[j];
        m2 += jd * jd * coeffs_[j];
    }
    return m2 - m * m;
}

TruncatedSeries compose_outer(const OffspringDistribution& outer, const TruncatedSeries& inner,
                              Eigen::Index degree_cap) {
    if (degree_cap < 1) throw ValidationError("degree cap must be positive");
    const Eigen::Index K = outer.max_support();
    const double inner_deg = static_cast<double>(inner.degree());
    if (inner_deg * static_cast<double>(K) > 5.0e7)
        throw DegreeOverflow("composition would exceed the memory budget");

    // Horner in polynomial space: acc = p_K; acc = acc*inner + p_{K-1}; ...
    bool truncated = !inner.exact();
    Eigen::ArrayXd acc = Eigen::ArrayXd::Constant(1, outer.prob(K));
    for (Eigen::Index j = K - 1; j >= 0; --j) {
        acc = multiply_truncated(acc, inner.coeffs(), degree_cap, &truncated);
        acc[0] += outer.prob(j);
    }
    if (outer.tail_mass() > 0.0) truncated = true;

    double tail = 0.0;
    if (truncated) {
        // Probability series: whatever was cut (or inherited from an inexact
        // input) is bounded by the missing mass.
        tail = std::max(0.0, 1.0 - acc.sum());
    }
    return TruncatedSeries(std::move(acc), tail, !truncated);
}

TruncatedSeries compose_with_poly(const TruncatedSeries& outer, const TruncatedSeries& poly,
                                  Eigen::Index degree_cap) {
    if (!poly.exact()) throw PreconditionViolation("inner polynomial must be exact");
    bool truncated = !outer.exact();
    Eigen::ArrayXd acc = Eigen::ArrayXd::Constant(1, outer.coeffs()[outer.degree()]);
    for (Eigen::Index j = outer.degree() - 1; j >= 0; --j) {
        acc = multiply_truncated(acc, poly.coeffs(), degree_cap, &truncated);
        acc[0] += outer.coeffs()[j];
    }
    double tail = 0.0;
    if (truncated) tail = std::max(0.0, 1.0 - acc.sum());
    return TruncatedSeries(std::move(acc), tail, !truncated);
}

Eigen::ArrayXd convolve(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v) {
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(u.size() + v.size() - 1);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double ui = u[i];
        if (ui == 0.0) continue;
        for (Eigen::Index j = 0; j < v.size(); ++j) out[i + j] += ui * v[j];
    }
    return out;
}

void dump_series_csv(const TruncatedSeries& series, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", series.tail_bound());
    out << "# exact=" << (series.exact() ? "true" : "false") << " tail_bound=" << buf << "\n";
    out << "index,coefficient\n";
    for (Eigen::Index j = 0; j <= series.degree(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.coefficient(j));
        out << j << "," << buf << "\n";
    }
}

}  // namespace gwc
