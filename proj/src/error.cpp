#include "depthreg/error.hpp"

namespace depthreg {

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::invalid_direction: return "invalid_direction";
    case ErrorCode::unsupported_dimension: return "unsupported_dimension";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::invalid_bandwidth: return "invalid_bandwidth";
    case ErrorCode::empty_neighborhood: return "empty_neighborhood";
    case ErrorCode::degenerate_design: return "degenerate_design";
    case ErrorCode::solver_failure: return "solver_failure";
    case ErrorCode::contour_failure: return "contour_failure";
    case ErrorCode::ingestion_error: return "ingestion_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

} // namespace depthreg
