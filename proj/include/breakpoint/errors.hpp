#ifndef BREAKPOINT_ERRORS_HPP
#define BREAKPOINT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bp {

// Regression / estimation failures. Each carries a stable name prefix so the
// CLI can map them to exit codes and users can grep logs.

struct SingularDesign : std::runtime_error {
    explicit SingularDesign(const std::string& what)
        : std::runtime_error("SingularDesign: " + what) {}
};

struct CandidateOutOfRange : std::out_of_range {
    explicit CandidateOutOfRange(const std::string& what)
        : std::out_of_range("CandidateOutOfRange: " + what) {}
};

struct SingularSubsample : std::runtime_error {
    explicit SingularSubsample(const std::string& what)
        : std::runtime_error("SingularSubsample: " + what) {}
};

struct DegenerateSubsample : std::runtime_error {
    explicit DegenerateSubsample(const std::string& what)
        : std::runtime_error("DegenerateSubsample: " + what) {}
};

struct AllCandidatesSingular : std::runtime_error {
    explicit AllCandidatesSingular(const std::string& what)
        : std::runtime_error("AllCandidatesSingular: " + what) {}
};

struct WeightShapeMismatch : std::invalid_argument {
    explicit WeightShapeMismatch(const std::string& what)
        : std::invalid_argument("WeightShapeMismatch: " + what) {}
};

struct ZeroMagnitude : std::runtime_error {
    explicit ZeroMagnitude(const std::string& what)
        : std::runtime_error("ZeroMagnitude: " + what) {}
};

}  // namespace bp

#endif
