#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depthreg {

enum class ErrorCode
{
  invalid_direction,
  unsupported_dimension,
  invalid_input,
  invalid_bandwidth,
  empty_neighborhood,
  degenerate_design,
  solver_failure,
  contour_failure,
  ingestion_error,
  config_error,
  io_error
};

std::string_view to_string(ErrorCode code);

//! Exception carrying a machine-readable code and the module that raised it.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, std::string module, const std::string& message, std::string context = {})
    : std::runtime_error(message)
    , code_(code)
    , module_(std::move(module))
    , context_(std::move(context))
  {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }
  const std::string& context() const { return context_; }

private:
  ErrorCode code_;
  std::string module_;
  std::string context_;
};

} // namespace depthreg
