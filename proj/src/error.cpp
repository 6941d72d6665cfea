#include "spp/types.hpp"

namespace spp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_component: return "invalid-component";
    case ErrorCode::invalid_stepsize: return "invalid-stepsize";
    case ErrorCode::diverged: return "diverges";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::infeasible: return "infeasible-detected";
    case ErrorCode::max_iterations: return "max-iterations";
    case ErrorCode::domain: return "domain";
    case ErrorCode::stepsize_too_large: return "stepsize-too-large";
    case ErrorCode::unsupported_schedule: return "unsupported-schedule";
    case ErrorCode::case_violation: return "case-violation";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::undefined_slope: return "undefined-slope";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace spp
