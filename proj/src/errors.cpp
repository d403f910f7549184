#include "ddfv/errors.hpp"

namespace ddfv {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Verification:
            return 2;
        case ErrorKind::Solver:
        case ErrorKind::NonConvergence:
            return 3;
        default:
            return 4;
    }
}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Partition: return "partition-error";
        case ErrorKind::MeasureZeroDirichlet: return "measure-zero-dirichlet";
        case ErrorKind::InconsistentBoundaryData: return "inconsistent-boundary-data";
        case ErrorKind::HypothesisViolation: return "hypothesis-violation";
        case ErrorKind::Parse: return "parse-error";
        case ErrorKind::Solver: return "solver-error";
        case ErrorKind::NonConvergence: return "nonconvergence";
        case ErrorKind::Precondition: return "precondition-violation";
        case ErrorKind::Verification: return "verification-failure";
    }
    return "unknown";
}

}  // namespace ddfv
