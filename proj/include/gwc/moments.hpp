#ifndef GWC_MOMENTS_HPP
#define GWC_MOMENTS_HPP

#include "gwc/offspring.hpp"

namespace gwc {

/// Deterministic normalizers of a schedule: one-step means omega_n, the
/// running-product mean Gamma_n (Gamma_0 = 1, Gamma_{n+1} = omega_n Gamma_n)
/// and its role-swapped twin. sigma_sq is only meaningful for a pair.
class NormalizerTable {
public:
    explicit NormalizerTable(MechanismSchedule schedule);

    const MechanismSchedule& schedule() const { return schedule_; }
    /// m_a * m_b (pair schedules only).
    double m() const;
    double sigma_sq() const;

    double omega(long n) const;
    double gamma(long n) const;
    /// Gamma with the cycle started one mechanism later (for a pair: roles
    /// of m_a and m_b exchanged).
    double gamma_tilde(long n) const;

private:
    MechanismSchedule schedule_;
    std::vector<double> means_;
};

/// E[Z_n] = Gamma_n.
double mean_zn(const NormalizerTable& table, long n);

/// Two-case closed form for Var(Z_n); singular at m = 1 (CriticalCase below).
double var_zn(const NormalizerTable& table, long n);

struct CriticalCase : NumericalError {
    explicit CriticalCase(const std::string& msg) : NumericalError(msg) {}
};

/// Var(W) = sigma^2 / (m^2 - m), supercritical pairs only.
double var_w(const NormalizerTable& table);

}  // namespace gwc

#endif
