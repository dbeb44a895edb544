#pragma once

#include <stdexcept>
#include <string>

namespace edgeformer {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad caller input: mismatched shapes, invalid labels, malformed config.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class DimensionError : public ValidationError {
public:
    explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

class ConfigError : public ValidationError {
public:
    explicit ConfigError(const std::string& msg) : ConfigError(msg, "") {}
    ConfigError(const std::string& msg, const std::string& key)
        : ValidationError(key.empty() ? msg : msg + " (key: " + key + ")") {}
};

// Malformed text input; message always carries a 1-based line number.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : ValidationError(msg + " at line " + std::to_string(line)), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A forward op produced NaN/Inf from finite inputs, or an input was non-finite.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Filesystem trouble: missing file, unwritable path, short read.
// The CLI maps these to exit code 2.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Structurally broken checkpoint file. Each failure mode is a distinct kind.
class CheckpointFormatError : public IoError {
public:
    enum class Kind { BadMagic, BadVersion, Truncated, BadHeader };

    CheckpointFormatError(Kind kind, const std::string& msg) : IoError(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Encoder layout mismatch when moving pretrained weights into a classifier.
class TransferError : public ValidationError {
public:
    explicit TransferError(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace edgeformer
