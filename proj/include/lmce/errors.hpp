#pragma once

#include <stdexcept>
#include <string>

namespace lmce {

// Domain errors. Each guard named in the operation contracts gets its own
// type so callers (and tests) can distinguish "hypothesis fails" from bugs.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateSpectrum : Error {
    explicit DegenerateSpectrum(const std::string& msg) : Error(msg) {}
};
struct SingularJacobian : Error {
    explicit SingularJacobian(const std::string& msg) : Error(msg) {}
};
struct SingularHessian : Error {
    explicit SingularHessian(const std::string& msg) : Error(msg) {}
};
struct SubcriticalPhase : Error {
    explicit SubcriticalPhase(const std::string& msg) : Error(msg) {}
};
struct EigGapTooSmall : Error {
    explicit EigGapTooSmall(const std::string& msg) : Error(msg) {}
};
struct ConstraintViolated : Error {
    explicit ConstraintViolated(const std::string& msg) : Error(msg) {}
};
struct LineSearchFailed : Error {
    explicit LineSearchFailed(const std::string& msg) : Error(msg) {}
};
struct LinearSolveStalled : Error {
    explicit LinearSolveStalled(const std::string& msg) : Error(msg) {}
};
struct ContinuationStalled : Error {
    explicit ContinuationStalled(const std::string& msg) : Error(msg) {}
};
struct FrameHypothesisUnmet : Error {
    explicit FrameHypothesisUnmet(const std::string& msg) : Error(msg) {}
};
struct JacobianBoundViolated : Error {
    explicit JacobianBoundViolated(const std::string& msg) : Error(msg) {}
};
struct TargetOutsideImage : Error {
    explicit TargetOutsideImage(const std::string& msg) : Error(msg) {}
};
struct PhiNotDiverging : Error {
    explicit PhiNotDiverging(const std::string& msg) : Error(msg) {}
};
struct PhiNonpositive : Error {
    explicit PhiNonpositive(const std::string& msg) : Error(msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace lmce
