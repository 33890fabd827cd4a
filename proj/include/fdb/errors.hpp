#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdb {

// Bad argument to an operation (shape mismatch, invalid kernel size, ...).
struct ParamError : std::invalid_argument {
    explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input data failed a validity check (unnormalized kernels, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal invariant; indicates a bug, not bad user input.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed file; carries the byte offset where parsing gave up.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// A required earlier artifact (e.g. a stage checkpoint) is missing.
struct PrereqError : std::runtime_error {
    explicit PrereqError(const std::string& msg) : std::runtime_error(msg) {}
};

// Artifacts that cannot be combined (checkpoint vs. dataset dims, ...).
struct CompatError : std::runtime_error {
    explicit CompatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fdb
