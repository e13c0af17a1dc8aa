#pragma once

#include <stdexcept>
#include <string>

namespace tenspec {

/// Base of every error raised by the library.
class TensorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeMismatch : public TensorError {
    using TensorError::TensorError;
};
class InvalidShape : public TensorError {
    using TensorError::TensorError;
};
class InvalidAxis : public TensorError {
    using TensorError::TensorError;
};
class InvalidSplit : public TensorError {
    using TensorError::TensorError;
};
class OverflowError : public TensorError {
    using TensorError::TensorError;
};
class NonFiniteValue : public TensorError {
    using TensorError::TensorError;
};

class NotSymmetric : public TensorError {
    using TensorError::TensorError;
};
class NotSorted : public TensorError {
    using TensorError::TensorError;
};

/// Jacobi sweep limit exceeded; carries the off-diagonal norm at exit.
class NoConvergence : public TensorError {
public:
    NoConvergence(const std::string& what, double residual)
        : TensorError(what), residual_(residual) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class NotSelfAdjoint : public TensorError {
public:
    NotSelfAdjoint(const std::string& what, double max_asymmetry)
        : TensorError(what), max_asymmetry_(max_asymmetry) {}
    [[nodiscard]] double max_asymmetry() const noexcept { return max_asymmetry_; }

private:
    double max_asymmetry_;
};

class NotNND : public TensorError {
    using TensorError::TensorError;
};
class InvalidKeep : public TensorError {
    using TensorError::TensorError;
};
class GroupingMismatch : public TensorError {
    using TensorError::TensorError;
};
class ParseError : public TensorError {
    using TensorError::TensorError;
};

}  // namespace tenspec
