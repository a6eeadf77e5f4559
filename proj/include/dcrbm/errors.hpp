#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dcrbm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes disagree with the model dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Exact enumeration was requested beyond the configured cap.
class IntractableError : public Error {
public:
    using Error::Error;
};

/// A configuration or experiment spec violates an invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `offset()` is the byte offset (binary formats) or
/// line number (text formats) at which parsing failed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dcrbm
