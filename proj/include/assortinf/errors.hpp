#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace assortinf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A value is finite but too large to evaluate safely (e.g. |theta| > 30).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Input data violates a structural invariant (dataset, partition, config).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Requested Delta targets have no positive sorted revenue solution.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Enumeration refused because the instance is too large.
class RefusalError : public Error {
public:
    using Error::Error;
};

/// Bordered Hessian system is numerically singular.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double rcond)
        : Error(what), rcond_(rcond) {}
    double rcond() const { return rcond_; }

private:
    double rcond_;
};

/// Plug-in variance quadratic form is not positive.
class VarianceError : public Error {
public:
    VarianceError(const std::string& what, int k) : Error(what), k_(k) {}
    int k() const { return k_; }

private:
    int k_;
};

/// The MLE solver stopped before reaching the gradient tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate,
                     double gradient_norm, int iterations)
        : Error(what), last_iterate_(std::move(last_iterate)),
          gradient_norm_(gradient_norm), iterations_(iterations) {}

    const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
    double gradient_norm() const { return gradient_norm_; }
    int iterations() const { return iterations_; }

private:
    Eigen::VectorXd last_iterate_;
    double gradient_norm_;
    int iterations_;
};

}  // namespace assortinf
