#pragma once

#include <stdexcept>
#include <string>

namespace xite {

// Input/contract violations (bad files, bad shapes, infeasible requests).
// CLI maps these to exit code 2; anything else that escapes a stage is 3.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure mid-run (divergence, degenerate scatter, ...).
class ComputeError : public std::runtime_error {
public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace xite
