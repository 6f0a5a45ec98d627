// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace spdelab {

// Every failure the library raises is one of these. The C API maps them
// onto the SPDELAB_E_* codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad model / config / schema
class ConfigError : public Error {
public:
    using Error::Error;
};

// caller passed something out of range (negative time, zero direction, ...)
class ArgumentError : public Error {
public:
    using Error::Error;
};

// non-finite state during time stepping
class SimulationError : public Error {
public:
    SimulationError(const std::string& msg, long step)
        : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

// non-finite samples, too few usable points in a fit, ...
class EstimatorError : public Error {
public:
    using Error::Error;
};

// Picard iteration did not contract
class DivergenceError : public Error {
public:
    using Error::Error;
};

// output directory / file problems
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace spdelab
