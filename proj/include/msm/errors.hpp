#pragma once

#include <stdexcept>
#include <string>

namespace msm {

/// Invalid configuration, unknown names, malformed input files. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Observation rows that violate the model structure.
class DataError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Optimizer non-convergence, non-finite likelihoods, failed decompositions. CLI exit code 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A likelihood contribution evaluated to a non-finite value.
class LikelihoodDomainError : public NumericalError {
public:
    LikelihoodDomainError(const std::string& subject, const std::string& what)
        : NumericalError("non-finite likelihood contribution for subject " + subject + ": " + what),
          subject_(subject) {}

    const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

}  // namespace msm
