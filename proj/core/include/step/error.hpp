#pragma once

#include <stdexcept>
#include <string>

namespace step {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (index out of range, bad argument).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Tensor, kernel or layer shapes do not compose.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value outside {-1, 0, +1} was handed to the ternary encoder.
class EncodingError : public Error {
public:
    using Error::Error;
};

/// Serialized bytes failed validation (bad magic, reserved code, hash mismatch).
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// An input file or config does not follow its documented format.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace step
