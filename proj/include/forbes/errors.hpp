#pragma once

#include <stdexcept>

namespace forbes {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raster or grid shape violates a precondition.
struct DimensionError : Error { using Error::Error; };
// Byte stream is not a file format we read.
struct FormatError : Error { using Error::Error; };
// Filesystem-level read/write failure.
struct IoError : Error { using Error::Error; };
// Flat parameter vector has the wrong length for its layout.
struct LengthError : Error { using Error::Error; };
// External extractor sent something outside the wire protocol.
struct ProtocolError : Error { using Error::Error; };
// Job configuration is internally inconsistent.
struct ConfigError : Error { using Error::Error; };
// Finite-difference step size is unusable.
struct InvalidStepError : Error { using Error::Error; };

}  // namespace forbes
