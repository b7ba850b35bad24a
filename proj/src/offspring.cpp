#include "gwc/offspring.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace gwc {

namespace {
constexpr double kMassTol = 1e-12;

Eigen::ArrayXd parse_probs(const nlohmann::json& j) {
    if (!j.contains("probs")) throw ValidationError("distribution document missing \"probs\"");
    const auto& p = j.at("probs");
    if (p.is_array()) {
        Eigen::ArrayXd out = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(p.size()));
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!p[i].is_number())
                throw ValidationError("probs[" + std::to_string(i) + "] is not a number");
            out[static_cast<Eigen::Index>(i)] = p[i].get<double>();
        }
        return out;
    }
    if (p.is_object()) {
        // Sparse form {"0": p0, "2": p2}; normalized to dense.
        Eigen::Index max_idx = 0;
        for (auto it = p.begin(); it != p.end(); ++it) {
            std::size_t pos = 0;
            long idx = -1;
            try {
                idx = std::stol(it.key(), &pos);
            } catch (const std::exception&) {
                throw ValidationError("probs key \"" + it.key() + "\" is not an index");
            }
            if (pos != it.key().size() || idx < 0)
                throw ValidationError("probs key \"" + it.key() + "\" is not a valid index");
            max_idx = std::max<Eigen::Index>(max_idx, idx);
        }
        Eigen::ArrayXd out = Eigen::ArrayXd::Zero(max_idx + 1);
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it.value().is_number())
                throw ValidationError("probs[\"" + it.key() + "\"] is not a number");
            out[std::stol(it.key())] = it.value().get<double>();
        }
        return out;
    }
    throw ValidationError("\"probs\" must be an array or an index-keyed object");
}
}  // namespace

OffspringDistribution::OffspringDistribution(Eigen::ArrayXd probs, double tail_mass)
    : probs_(std::move(probs)), tail_mass_(tail_mass) {
    if (probs_.size() == 0) throw ValidationError("empty probability vector");
    for (Eigen::Index j = 0; j < probs_.size(); ++j) {
        if (!(probs_[j] >= 0.0))
            throw ValidationError("negative probability at index " + std::to_string(j));
    }
    if (!(tail_mass_ >= 0.0)) throw ValidationError("negative tail mass");
    const double total = probs_.sum() + tail_mass_;
    if (std::abs(total - 1.0) > kMassTol)
        throw ValidationError("probabilities sum to " + std::to_string(total) +
                              ", expected 1 within 1e-12");
    mean_ = 0.0;
    for (Eigen::Index j = 1; j < probs_.size(); ++j) mean_ += static_cast<double>(j) * probs_[j];
}

OffspringDistribution::OffspringDistribution(std::initializer_list<double> probs)
    : OffspringDistribution(Eigen::Map<const Eigen::ArrayXd>(probs.begin(),
                                                             static_cast<Eigen::Index>(probs.size()))
                                .eval()) {}

OffspringDistribution OffspringDistribution::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
    return OffspringDistribution(parse_probs(j));
}

Eigen::Index OffspringDistribution::min_support() const {
    for (Eigen::Index j = 0; j < probs_.size(); ++j)
        if (probs_[j] > 0.0) return j;
    return 0;
}

Eigen::Index OffspringDistribution::max_support() const {
    for (Eigen::Index j = probs_.size() - 1; j >= 0; --j)
        if (probs_[j] > 0.0) return j;
    return 0;
}

double OffspringDistribution::pgf(double s) const {
    if (!std::isfinite(s)) throw DomainError("pgf argument must be finite");
    if (s > 1.0 && tail_mass_ > 0.0)
        throw DomainError("pgf(s) with s > 1 is not certifiable for a truncated distribution");
    // Horner.
    double acc = 0.0;
    for (Eigen::Index j = probs_.size() - 1; j >= 0; --j) acc = acc * s + probs_[j];
    return acc;
}

double OffspringDistribution::pgf_derivative(double s, int order) const {
    if (order != 1 && order != 2) throw DomainError("pgf_derivative order must be 1 or 2");
    if (s > 1.0 && tail_mass_ > 0.0)
        throw DomainError("pgf derivative with s > 1 is not certifiable for a truncated distribution");
    double acc = 0.0;
    if (order == 1) {
        for (Eigen::Index j = probs_.size() - 1; j >= 1; --j)
            acc = acc * s + static_cast<double>(j) * probs_[j];
    } else {
        for (Eigen::Index j = probs_.size() - 1; j >= 2; --j)
            acc = acc * s + static_cast<double>(j) * static_cast<double>(j - 1) * probs_[j];
    }
    return acc;
}

MomentSummary OffspringDistribution::moments() const {
    if (tail_mass_ > 0.0)
        throw PreconditionViolation("moments require exact finite support");
    MomentSummary m;
    m.mean = mean_;
    m.second_factorial_moment = pgf_derivative(1.0, 2);
    m.variance = m.second_factorial_moment + m.mean - m.mean * m.mean;
    return m;
}

MechanismSchedule::MechanismSchedule(std::vector<OffspringDistribution> mechanisms)
    : mechanisms_(std::move(mechanisms)) {
    if (mechanisms_.empty()) throw ValidationError("schedule must contain at least one mechanism");
}

MechanismSchedule MechanismSchedule::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("mechanisms") || !j.at("mechanisms").is_array())
        throw ValidationError("schedule document must contain a \"mechanisms\" array");
    std::vector<OffspringDistribution> mechs;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < j.at("mechanisms").size(); ++i) {
        try {
            mechs.emplace_back(parse_probs(j.at("mechanisms")[i]));
        } catch (const ValidationError& e) {
            failures.push_back("mechanisms[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (!failures.empty()) {
        std::string msg;
        for (const auto& f : failures) {
            if (!msg.empty()) msg += "; ";
            msg += f;
        }
        throw ValidationError(msg);
    }
    return MechanismSchedule(std::move(mechs));
}

const OffspringDistribution& MechanismSchedule::a() const {
    require_pair("a()");
    return mechanisms_[0];
}

const OffspringDistribution& MechanismSchedule::b() const {
    require_pair("b()");
    return mechanisms_[1];
}

void MechanismSchedule::require_pair(const char* what) const {
    if (mechanisms_.size() != 2)
        throw PreconditionViolation(std::string(what) +
                                    " requires a schedule of exactly two mechanisms, got " +
                                    std::to_string(mechanisms_.size()));
}

const char* to_string(Criticality c) {
    switch (c) {
        case Criticality::Subcritical: return "subcritical";
        case Criticality::Critical: return "critical";
        case Criticality::Supercritical: return "supercritical";
    }
    return "?";
}

Criticality classify(const MechanismSchedule& pair) {
    pair.require_pair("classify");
    const double m = pair.a().mean() * pair.b().mean();
    if (std::abs(m - 1.0) <= 1e-12) return Criticality::Critical;
    return m > 1.0 ? Criticality::Supercritical : Criticality::Subcritical;
}

double smallest_fixed_point(const std::function<double(double)>& pgf,
                            double derivative_at_one, double tol, int max_iter) {
    if (derivative_at_one <= 1.0) return 1.0;
    // h(s) = pgf(s) - s with h(0) >= 0 and h(s) < 0 on (rho, 1).
    double lo = 0.0;
    double h0 = pgf(0.0);
    if (h0 == 0.0) return 0.0;
    double eta = 1e-4;
    double hi = 1.0 - eta;
    int guard = 0;
    while (pgf(hi) - hi >= 0.0) {
        eta /= 16.0;
        hi = 1.0 - eta;
        if (++guard > 60)
            throw NonConvergence("could not bracket the smallest fixed point below 1");
    }
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double h = pgf(mid) - mid;
        if (h > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= tol) {
            // Secant-style polish: downstream normalizations divide by powers
            // of derivatives at this root, so push the residual to machine
            // precision.
            double x = 0.5 * (lo + hi);
            const double fd_h = 1e-7;
            for (int polish = 0; polish < 3; ++polish) {
                const double deriv = (pgf(x + fd_h) - pgf(x - fd_h)) / (2.0 * fd_h);
                if (std::abs(deriv - 1.0) < 1e-8) break;
                const double next = x - (pgf(x) - x) / (deriv - 1.0);
                if (!(next >= 0.0 && next <= 1.0)) break;
                x = next;
            }
            return x;
        }
    }
    throw NonConvergence("fixed-point bisection did not reach tolerance");
}

}  // namespace gwc
