#pragma once

#include <stdexcept>
#include <string>

namespace emogait {

/// Base class for all toolkit errors. Validation-class errors map to CLI
/// exit code 1, numerical failures to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad inputs: malformed files, inconsistent shapes, out-of-range options.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Tensor/sequence dimensions do not agree.
class ShapeError : public ValidationError {
public:
    explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

/// Structured-text parse failure; message carries the offending line number.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line)
        : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// A pose configuration on which a geometric feature is undefined
/// (coincident joints, zero-length bones, degenerate triangles).
class DegeneratePoseError : public ValidationError {
public:
    explicit DegeneratePoseError(const std::string& msg) : ValidationError(msg) {}
};

/// A gait with too few detectable foot contacts to build a stepping phase.
class InsufficientStepsError : public ValidationError {
public:
    explicit InsufficientStepsError(const std::string& msg) : ValidationError(msg) {}
};

/// API misuse (e.g. optimizer step with no gradients populated).
class UsageError : public ValidationError {
public:
    explicit UsageError(const std::string& msg) : ValidationError(msg) {}
};

/// Non-finite values or other numerical breakdown during computation.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace emogait
