#pragma once

#include <stdexcept>
#include <string>

namespace dentocc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor extents, grid dimensions or vector lengths disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared where only finite values are allowed.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its documented domain (bad class index, t outside [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Thresholding a segmentation channel selected no pixel.
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (missing file, unwritable directory, short write).
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace dentocc
