#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bcs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input values (bounds, signs, sizes).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A documented precondition on the structure of an argument does not hold.
class ContractError : public Error {
public:
    using Error::Error;
};

/// The requested quantity is outside the regime the solver supports.
class RegimeError : public Error {
public:
    using Error::Error;
};

/// A root was requested on an interval that does not bracket it.
class BracketError : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of its iteration budget. Carries the best iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best_iterate = {})
        : Error(what), best_iterate_(std::move(best_iterate)) {}

    const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }

private:
    std::vector<double> best_iterate_;
};

/// Two refinement levels of a discretisation disagree beyond tolerance.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double coarse, double fine)
        : Error(what), coarse_(coarse), fine_(fine) {}

    double coarse() const noexcept { return coarse_; }
    double fine() const noexcept { return fine_; }

private:
    double coarse_;
    double fine_;
};

}  // namespace bcs
