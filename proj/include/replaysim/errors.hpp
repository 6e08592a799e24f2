#pragma once

#include <stdexcept>
#include <string>

namespace replaysim {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap before meeting tolerance.
struct NonConvergence : Error {
    NonConvergence(const std::string& what, long iterations, double last_delta)
        : Error(what), iterations(iterations), last_delta(last_delta) {}
    long iterations;
    double last_delta;
};

/// Operand shapes do not conform.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// An operator required to be stable (spectral radius < 1) is not.
struct UnstableOperator : Error {
    using Error::Error;
};

/// A matrix required to be positive semi-definite is not, beyond tolerance.
struct NotPSD : Error {
    using Error::Error;
};

/// A matrix required to be invertible (or a determinant) degenerated.
struct Singular : Error {
    using Error::Error;
};

/// A statistic was requested from fewer samples than it needs.
struct InsufficientSamples : Error {
    using Error::Error;
};

/// A replay was requested before anything was recorded.
struct EmptyBuffer : Error {
    using Error::Error;
};

/// Scenario text could not be parsed; message carries position context.
struct ParseError : Error {
    using Error::Error;
};

/// Scenario parsed but violates a model invariant; message names the field.
struct ValidationError : Error {
    using Error::Error;
};

/// Preset name is not one of the published presets.
struct UnknownPreset : Error {
    using Error::Error;
};

}  // namespace replaysim
