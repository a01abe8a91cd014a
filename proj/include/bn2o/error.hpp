#pragma once

#include <stdexcept>
#include <string>

namespace bn2o {

/// Input violates a model or configuration invariant.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Requested computation exceeds an enumeration cap or work budget.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Evidence has zero probability under the model being queried.
class ImpossibleEvidenceError : public std::runtime_error {
public:
    explicit ImpossibleEvidenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bn2o
