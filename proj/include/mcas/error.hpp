#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcas {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, usage, or unparseable input. The CLI maps these to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; the message names the file and row.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Failure of the simulated system or of a measurement on it. The CLI maps these to exit code 1.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf in a field, or a negative undershoot beyond tolerance.
class IntegrityError : public DomainError {
public:
    IntegrityError(const std::string& what, double time)
        : DomainError(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Adaptive step size dropped below dt_min.
class StiffFailure : public DomainError {
public:
    StiffFailure(const std::string& what, double time, std::vector<double> state)
        : DomainError(what), time_(time), state_(std::move(state)) {}
    double time() const noexcept { return time_; }
    const std::vector<double>& state() const noexcept { return state_; }

private:
    double time_;
    std::vector<double> state_;
};

struct ResidualSample {
    double time;
    double residual;
};

/// Equilibration hit its time cap before the residual dropped below tolerance.
class NonConvergence : public DomainError {
public:
    NonConvergence(const std::string& what, std::vector<ResidualSample> history)
        : DomainError(what), history_(std::move(history)) {}
    const std::vector<ResidualSample>& history() const noexcept { return history_; }

private:
    std::vector<ResidualSample> history_;
};

class UndefinedCenterOfMass : public DomainError {
public:
    using DomainError::DomainError;
};

class InsufficientData : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace mcas
