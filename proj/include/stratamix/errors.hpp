#ifndef STRATAMIX_ERRORS_HPP
#define STRATAMIX_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stratamix {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An observation has zero density under every grid point.
class ZeroLikelihoodRow : public Error {
public:
    explicit ZeroLikelihoodRow(std::size_t row)
        : Error("stratum " + std::to_string(row) +
                " has zero likelihood under every grid point (grid range excludes the data)"),
          row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A mixture density evaluated to exactly zero.
class NumericalUnderflow : public Error {
public:
    using Error::Error;
};

/// No stratum carries a realized observation.
class AllStrataEmpty : public Error {
public:
    using Error::Error;
};

class EmptyData : public Error {
public:
    using Error::Error;
};

/// The likelihood-ratio feasible set is empty.
class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

/// Malformed input file. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A per-threshold fit failed; the original error is nested.
class ThresholdFailure : public Error {
public:
    explicit ThresholdFailure(double threshold)
        : Error("fit failed at threshold c = " + std::to_string(threshold)), threshold_(threshold) {}

    double threshold() const noexcept { return threshold_; }

private:
    double threshold_;
};

}  // namespace stratamix

#endif  // STRATAMIX_ERRORS_HPP
