#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iform {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

// A matrix that must be invertible is (numerically) singular.
struct SingularityError : Error {
    using Error::Error;
};

// Malformed or truncated file; carries the byte offset of the problem.
struct FormatError : Error {
    std::size_t offset;
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

// A dataset or tile pool ended up empty.
struct EmptyDatasetError : Error {
    using Error::Error;
};

// Invalid run configuration (CLI exits 2 on this).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace iform
