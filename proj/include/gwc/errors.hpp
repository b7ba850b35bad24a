#ifndef GWC_ERRORS_HPP
#define GWC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gwc {

// Input failed validation (bad probabilities, out-of-range argument, ...).
// CLI maps this family to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : ValidationError {
    explicit DomainError(const std::string& msg) : ValidationError(msg) {}
};

struct IndexOutOfRange : ValidationError {
    explicit IndexOutOfRange(const std::string& msg) : ValidationError(msg) {}
};

struct PreconditionViolation : ValidationError {
    explicit PreconditionViolation(const std::string& msg) : ValidationError(msg) {}
};

// Numerical failure after a valid request. CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergence : NumericalError {
    explicit NonConvergence(const std::string& msg) : NumericalError(msg) {}
};

struct DegreeOverflow : NumericalError {
    explicit DegreeOverflow(const std::string& msg) : NumericalError(msg) {}
};

struct NonMonotone : NumericalError {
    explicit NonMonotone(const std::string& msg) : NumericalError(msg) {}
};

struct MonotonicityViolation : NumericalError {
    explicit MonotonicityViolation(const std::string& msg) : NumericalError(msg) {}
};

struct DivergenceSuspected : NumericalError {
    explicit DivergenceSuspected(const std::string& msg) : NumericalError(msg) {}
};

struct OverflowError : NumericalError {
    explicit OverflowError(const std::string& msg) : NumericalError(msg) {}
};

struct ResourceBudget : NumericalError {
    explicit ResourceBudget(const std::string& msg) : NumericalError(msg) {}
};

struct UnderpoweredCondition : NumericalError {
    explicit UnderpoweredCondition(const std::string& msg) : NumericalError(msg) {}
};

struct ProxyTooClose : ValidationError {
    explicit ProxyTooClose(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace gwc

#endif
