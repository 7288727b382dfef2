#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace sge {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Polyline = std::vector<Vec<Dim>>;

/// Broad failure classes. The CLI maps input/validation to exit code 2 and
/// everything raised while solving to exit code 3.
enum class ErrorCategory { input, validation, immersion, numeric, solver };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::input: return "input";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::immersion: return "immersion";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::solver: return "solver";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace sge
