#ifndef SPARSECOMP_ERROR_HPP
#define SPARSECOMP_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsecomp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was not met (shape mismatch, index out
/// of range, non-finite entry, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A factorization failed to converge or produced non-finite output.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Bernoulli sampling under the strict policy found an entry whose keep
/// probability m * p_ij exceeds one.
class FeasibilityError : public Error {
public:
    FeasibilityError(std::size_t row, std::size_t col, double keepProb)
        : Error("infeasible sampling budget: entry (" + std::to_string(row) + ", " +
                std::to_string(col) + ") has keep probability " + std::to_string(keepProb) +
                " > 1"),
          row_(row), col_(col), keepProb_(keepProb) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    double keep_probability() const noexcept { return keepProb_; }

private:
    std::size_t row_;
    std::size_t col_;
    double keepProb_;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A per-trial inequality that must hold deterministically was violated.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace sparsecomp

#endif  // SPARSECOMP_ERROR_HPP
