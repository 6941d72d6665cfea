#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace spp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  invalid_component,
  invalid_stepsize,
  diverged,
  invalid_spec,
  infeasible,
  max_iterations,
  domain,
  stepsize_too_large,
  unsupported_schedule,
  case_violation,
  insufficient_samples,
  undefined_slope,
  unsupported,
  parse,
  io,
  config,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spp
