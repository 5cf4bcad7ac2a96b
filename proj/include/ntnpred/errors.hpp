#pragma once

#include <stdexcept>
#include <string>

namespace ntnpred {

/// Invalid parameters, layer specs, profile names or config files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Broken internal invariant (e.g. backward called without a forward cache).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite values encountered during training or evaluation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint does not match the architecture it is loaded into.
class CheckpointMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ntnpred
