#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace senti {

// Base for every error raised by the library. Commands catch this and map it
// to a nonzero exit code with the message as the diagnostic.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset / text-format parse failure. `row` is the 1-based data row
// (the header line is not counted), or 0 when the failure is not row-bound.
class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
          row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Binary artifact problems: bad magic, truncation, checksum or fingerprint mismatch.
class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedVersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// Non-finite values detected during a numerical computation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace senti
