#ifndef DUALFRAME_ERRORS_HPP
#define DUALFRAME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dualframe {

// Input or data-model violations (bad file, bad weight, bad option value).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: infeasible constraints, singular systems, iteration caps.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / parse failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dualframe

#endif  // DUALFRAME_ERRORS_HPP
