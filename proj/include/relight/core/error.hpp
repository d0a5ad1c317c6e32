#pragma once

#include <stdexcept>
#include <string>

namespace relight {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration values (beta out of range, pool_size <= 0, omega > T, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Timestep outside [1, T].
struct StepError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Wrong channel count for a colour operation.
struct ChannelError : Error {
    using Error::Error;
};

// Dataset-level problems: empty input, mixed resolutions.
struct DataError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Unsupported file contents (e.g. 16-bit PNG).
struct FormatError : Error {
    using Error::Error;
};

// Missing or corrupt checkpoint.
struct LoadError : Error {
    using Error::Error;
};

// Checkpoint and caller disagree on resolution/channels.
struct CompatibilityError : Error {
    using Error::Error;
};

// Non-finite loss or gradient during sampling.
struct NumericError : Error {
    using Error::Error;
};

// Reference directory does not pair with the input set.
struct PairingError : Error {
    using Error::Error;
};

}  // namespace relight
