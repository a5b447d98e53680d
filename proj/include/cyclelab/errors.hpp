#pragma once

#include <stdexcept>
#include <string>

namespace cyclelab {

// Exit-code classes used by the CLI: 1 = malformed input, 2 = numeric budget
// exceeded, 3 = fragile twisted configuration, 4 = oracle mismatch.
enum class ErrorClass { Input = 1, Budget = 2, FragileTwisted = 3, Oracle = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string msg) : std::runtime_error(std::move(msg)), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

struct InvalidSpec : Error {
    explicit InvalidSpec(const std::string& m) : Error(ErrorClass::Input, "InvalidSpec: " + m) {}
};
struct InvalidMatrix : Error {
    explicit InvalidMatrix(const std::string& m) : Error(ErrorClass::Input, "InvalidMatrix: " + m) {}
};
struct LeftNeighborhood : Error {
    explicit LeftNeighborhood(const std::string& m) : Error(ErrorClass::Input, "LeftNeighborhood: " + m) {}
};
struct NoFixedPoint : Error {
    explicit NoFixedPoint(const std::string& m) : Error(ErrorClass::Input, "NoFixedPoint: " + m) {}
};
struct DomainEscape : Error {
    explicit DomainEscape(const std::string& m) : Error(ErrorClass::Input, "DomainEscape: " + m) {}
};
struct OutOfDomain : Error {
    explicit OutOfDomain(const std::string& m) : Error(ErrorClass::Input, "OutOfDomain: " + m) {}
};
struct AtBreakpoint : Error {
    explicit AtBreakpoint(const std::string& m) : Error(ErrorClass::Input, "AtBreakpoint: " + m) {}
};
struct TooFewDomains : Error {
    explicit TooFewDomains(const std::string& m) : Error(ErrorClass::Budget, "TooFewDomains: " + m) {}
};
struct NoNegativeMultiplier : Error {
    explicit NoNegativeMultiplier(const std::string& m)
        : Error(ErrorClass::Input, "NoNegativeMultiplier: " + m) {}
};
struct BudgetExceeded : Error {
    explicit BudgetExceeded(const std::string& m) : Error(ErrorClass::Budget, "BudgetExceeded: " + m) {}
};
struct OutOfInterval : Error {
    explicit OutOfInterval(const std::string& m) : Error(ErrorClass::Input, "OutOfInterval: " + m) {}
};
struct BoundViolated : Error {
    explicit BoundViolated(const std::string& m) : Error(ErrorClass::Budget, "BoundViolated: " + m) {}
};
struct ResidualBroken : Error {
    explicit ResidualBroken(const std::string& m) : Error(ErrorClass::Budget, "ResidualBroken: " + m) {}
};
struct SnapBudgetExceeded : Error {
    explicit SnapBudgetExceeded(const std::string& m)
        : Error(ErrorClass::Budget, "SnapBudgetExceeded: " + m) {}
};
struct NotTwisted : Error {
    explicit NotTwisted(const std::string& m) : Error(ErrorClass::Input, "NotTwisted: " + m) {}
};
struct NoAccumulationData : Error {
    explicit NoAccumulationData(const std::string& m)
        : Error(ErrorClass::Input, "NoAccumulationData: " + m) {}
};
struct TwistedWithoutAccumulation : Error {
    explicit TwistedWithoutAccumulation(const std::string& m)
        : Error(ErrorClass::FragileTwisted, "TwistedWithoutAccumulation: " + m) {}
};
struct OracleMismatch : Error {
    explicit OracleMismatch(const std::string& m) : Error(ErrorClass::Oracle, "OracleMismatch: " + m) {}
};
struct EmptyRegion : Error {
    explicit EmptyRegion(const std::string& m) : Error(ErrorClass::Input, "EmptyRegion: " + m) {}
};
struct RootsOutsideBase : Error {
    explicit RootsOutsideBase(const std::string& m)
        : Error(ErrorClass::Input, "RootsOutsideBase: " + m) {}
};
struct MarginViolated : Error {
    MarginViolated(const std::string& step, const std::string& m)
        : Error(ErrorClass::Input, "MarginViolated(" + step + "): " + m), step_(step) {}
    const std::string& step() const { return step_; }

private:
    std::string step_;
};

}  // namespace cyclelab
