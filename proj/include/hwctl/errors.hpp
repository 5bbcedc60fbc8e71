#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hwctl {

// Failure taxonomy shared by the library and the CLI. The CLI maps each type
// to a distinct process exit code (see tools/hwctl.cpp).

// Bad user input: malformed config, inconsistent dimensions, invalid flags.
struct ConfigError : std::runtime_error {
    std::vector<std::string> violations;  // one entry per problem, json-path prefixed
    explicit ConfigError(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}
    explicit ConfigError(const std::string& msg)
        : std::runtime_error(msg), violations{msg} {}
  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "config validation failed:";
        for (const auto& e : v) s += "\n  " + e;
        return s;
    }
};

// An iterative method failed to reach its tolerance (policy iteration cycling,
// Krylov breakdown, projected-gradient stall). Carries the iterate history so
// the caller can see what happened.
struct SolverError : std::runtime_error {
    std::vector<double> history;
    explicit SolverError(const std::string& msg, std::vector<double> h = {})
        : std::runtime_error(msg), history(std::move(h)) {}
};

// A runtime self-check tripped: state invariant violated, non-finite value,
// diagnostic audit failure.
struct DiagnosticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problem size exceeds a hard cap (grid nodes, oracle state space, brute-force
// candidate count).
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hwctl
