#include "gwc/moments.hpp"

#include <cmath>

namespace gwc {

NormalizerTable::NormalizerTable(MechanismSchedule schedule) : schedule_(std::move(schedule)) {
    means_.reserve(schedule_.size());
    for (std::size_t i = 0; i < schedule_.size(); ++i)
        means_.push_back(schedule_.mechanism(i).mean());
}

double NormalizerTable::m() const {
    schedule_.require_pair("NormalizerTable::m");
    return means_[0] * means_[1];
}

double NormalizerTable::sigma_sq() const {
    schedule_.require_pair("NormalizerTable::sigma_sq");
    const auto ma = schedule_.a().moments();
    const auto mb = schedule_.b().moments();
    // sigma^2 = sigma_a^2 m_b^2 + sigma_b^2 m_a (asymmetric by design of the
    // two-step variance recursion; checked against the exact-distribution
    // oracle in the tests).
    return ma.variance * mb.mean * mb.mean + mb.variance * ma.mean;
}

double NormalizerTable::omega(long n) const {
    if (n < 0) throw ValidationError("omega requires n >= 0");
    return means_[static_cast<std::size_t>(n) % means_.size()];
}

double NormalizerTable::gamma(long n) const {
    if (n < 0) throw ValidationError("gamma requires n >= 0");
    double g = 1.0;
    for (long i = 0; i < n; ++i) g *= omega(i);
    return g;
}

double NormalizerTable::gamma_tilde(long n) const {
    if (n < 0) throw ValidationError("gamma_tilde requires n >= 0");
    double g = 1.0;
    for (long i = 0; i < n; ++i) g *= means_[static_cast<std::size_t>(i + 1) % means_.size()];
    return g;
}

double mean_zn(const NormalizerTable& table, long n) { return table.gamma(n); }

double var_zn(const NormalizerTable& table, long n) {
    if (n < 0) throw ValidationError("var_zn requires n >= 0");
    const double m = table.m();
    if (std::abs(m - 1.0) < 1e-12)
        throw CriticalCase("closed-form Var(Z_n) is singular at m = 1; use the exact distribution");
    const double s2 = table.sigma_sq();
    const long k = n / 2;
    const double mk = std::pow(m, static_cast<double>(k));
    const double common = s2 * (mk / m) * (mk - 1.0) / (m - 1.0);
    if (n % 2 == 0) return common;
    const double ma = table.schedule().a().mean();
    const double sa2 = table.schedule().a().moments().variance;
    return common * ma * ma + sa2 * mk;
}

double var_w(const NormalizerTable& table) {
    const double m = table.m();
    if (m <= 1.0) throw DomainError("Var(W) requires a supercritical pair (m > 1)");
    return table.sigma_sq() / (m * m - m);
}

}  // namespace gwc
