#pragma once

#include <stdexcept>
#include <string>

namespace msa {

// Base of every error this library throws on purpose. The CLI maps these
// to exit codes: NumericError -> 3, everything else -> 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer shapes do not agree.
struct DimensionError : Error {
    using Error::Error;
};

// An API precondition was violated (empty sequence, non-scalar loss, ...).
struct ContractError : Error {
    using Error::Error;
};

// A class/target index is out of range.
struct IndexError : Error {
    using Error::Error;
};

// A file could not be parsed (bad JSON, bad key=value line, ...).
struct ParseError : Error {
    using Error::Error;
};

// A file parsed but its contents are inconsistent (duplicate record,
// gap in utterance indices, ...).
struct IntegrityError : Error {
    using Error::Error;
};

// The three modality streams of one utterance are not aligned.
struct AlignmentError : Error {
    using Error::Error;
};

// A model/report file has the wrong version or schema.
struct FormatError : Error {
    using Error::Error;
};

// A configuration value is invalid or unknown.
struct ConfigError : Error {
    using Error::Error;
};

// Training produced a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace msa
