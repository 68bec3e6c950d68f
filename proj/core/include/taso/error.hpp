#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taso {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, epoch out of range, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid model/optimizer/schedule/experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bad user data, e.g. a label outside [0, num_classes).
class InputError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf produced during a forward/backward pass.
class NumericFault : public Error {
public:
    NumericFault(const std::string& what, std::ptrdiff_t layer)
        : Error(what), layer_(layer) {}

    /// Index of the first layer whose output went non-finite, -1 for the loss itself.
    std::ptrdiff_t layer() const noexcept { return layer_; }

private:
    std::ptrdiff_t layer_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace taso
