#pragma once

#include <stdexcept>
#include <string>

namespace ddfv {

/// Error categories; each maps to one CLI exit code.
enum class ErrorKind {
    InvalidArgument,
    Partition,
    MeasureZeroDirichlet,
    InconsistentBoundaryData,
    HypothesisViolation,
    Parse,
    Solver,
    NonConvergence,
    Precondition,
    Verification,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }

/// Process exit code for an error kind: 2 verification, 3 solver, 4 invalid input.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace ddfv
