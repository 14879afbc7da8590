#ifndef PATHMED_TYPES_HPP
#define PATHMED_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pathmed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const { return category_; }
  int exit_code() const {
    switch (category_) {
      case ErrorCategory::config: return 2;
      case ErrorCategory::data: return 3;
      case ErrorCategory::numeric: return 4;
    }
    return 1;
  }

 private:
  ErrorCategory category_;
};

struct Warning {
  std::string code;
  std::string message;
  double value = 0.0;
};

}  // namespace pathmed

#endif
