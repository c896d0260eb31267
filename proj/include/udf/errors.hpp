#pragma once

#include <stdexcept>
#include <string>

namespace udf {

// Error classes map onto distinct CLI exit codes (see tools/).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable/missing files, malformed input records, bad checkpoint bytes.
struct IoError : Error {
    using Error::Error;
};

struct ParseError : IoError {
    using IoError::IoError;
};

struct CheckpointFormatError : IoError {
    using IoError::IoError;
};

// Unknown keys, invalid values in config files or flags.
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite values encountered during optimization or accumulation.
struct NumericError : Error {
    using Error::Error;
};

// Structurally empty or zero-extent inputs (empty cloud, zero-area mesh, ...).
struct DegenerateInputError : Error {
    using Error::Error;
};

}  // namespace udf
