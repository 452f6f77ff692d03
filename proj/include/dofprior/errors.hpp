#pragma once

#include <stdexcept>
#include <string>

namespace dofprior {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NotPositiveDefinite : public DomainError {
public:
    NotPositiveDefinite() : DomainError("matrix is not positive definite") {}
};

// A numerical procedure failed to reach its requested accuracy.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or missing input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dofprior
