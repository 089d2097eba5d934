#pragma once

#include <stdexcept>
#include <string>

namespace cqnls {

/// Process exit codes shared by the library and the command-line tool.
enum class ExitCode : int { ok = 0, assertion = 1, usage = 2, solver = 3 };

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad parameters, out-of-range configuration, mismatched inputs.
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ExitCode::usage, w) {}
};

/// Mathematically excluded request (e.g. coupling below the Hardy bound).
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ExitCode::usage, w) {}
};

/// Grid mismatch and similar misuse of the object model.
struct StructuralError : Error {
    explicit StructuralError(const std::string& w) : Error(ExitCode::usage, w) {}
};

/// Input data does not cover what an operation needs (e.g. a branch missing a mass range).
struct CoverageError : Error {
    explicit CoverageError(const std::string& w) : Error(ExitCode::usage, w) {}
};

/// Non-finite samples handed to a functional.
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ExitCode::usage, w) {}
};

/// Iterative method failed: no bracket, no convergence, instability.
struct SolverError : Error {
    explicit SolverError(const std::string& w) : Error(ExitCode::solver, w) {}
};

/// A post-hoc invariant check did not hold.
struct AssertionFailure : Error {
    explicit AssertionFailure(const std::string& w) : Error(ExitCode::assertion, w) {}
};

}  // namespace cqnls
