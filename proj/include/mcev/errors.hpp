#pragma once

#include <stdexcept>
#include <string>

namespace mcev {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Result not representable in binary64 (use the log-scaled variant).
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// An iterative evaluation did not reach its tolerance within the term cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, int terms_used, double est_error)
        : std::runtime_error(what), terms_used_(terms_used), est_error_(est_error) {}

    int terms_used() const noexcept { return terms_used_; }
    double est_error() const noexcept { return est_error_; }

private:
    int terms_used_;
    double est_error_;
};

}  // namespace mcev
