#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

/// Iterative solver (Newton, CG, BiCGStab) failed to reach its tolerance.
struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// A positivity or stability guard rejected the step; callers halve dt and retry.
struct StepTooLarge : std::runtime_error {
    explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

/// Explicit scheme called with dt above its parabolic CFL bound.
struct CflViolation : std::runtime_error {
    explicit CflViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Scalar root bracket has no sign change (invalid conversion rates).
struct NoSignChange : std::runtime_error {
    explicit NoSignChange(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration / expression syntax error, carries line and column.
struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& what, int line_, int column_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(column_) + ")"),
          line(line_), column(column_) {}
};

/// A declared coefficient bound fails its numerical audit.
struct AssumptionViolation : std::runtime_error {
    explicit AssumptionViolation(const std::string& what) : std::runtime_error(what) {}
};

} // namespace crossdiff
