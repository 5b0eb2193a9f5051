#pragma once

#include "depthreg/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace depthreg::cli {

using json = nlohmann::ordered_json;

const char* version();

struct RunConfig
{
  std::string command; // fit | cut | family | simulate | rate | ingest-info

  // data source: a CSV file or a simulation model
  std::string csv;
  std::string covariate;
  std::vector<std::string> responses;
  std::string model;
  int n = 999;
  std::uint64_t seed = 1;

  std::vector<double> taus{ 0.2 };
  std::vector<double> w0s;
  std::vector<double> w0_quantiles;
  std::string method = "bilinear";
  std::string kernel = "gaussian";
  std::optional<double> bandwidth;
  std::string bandwidth_rule;  // "", "thumb" or "fz:<h>"
  std::string tau_adjust = "auto"; // on | off | auto (on only for fz:<h>)
  int directions = 360;
  bool repair = true; // family only
  std::string out = ".";
  int threads = 1;
  std::string dump_lp;

  // rate only
  std::vector<int> ns{ 500, 2000, 8000 };
  int reps = 20;
  double bandwidth_exponent = -0.2;
  double reference_n = 999.0;
};

json to_json(const RunConfig& config);
RunConfig config_from_json(const json& j);

/// Throws config_error on inconsistent settings.
void validate(const RunConfig& config);

struct RunReport
{
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  json manifest;
};

/// Runs the command and writes artifacts plus manifest.json under config.out.
RunReport run(const RunConfig& config, std::ostream& out);

/// Comma-separated list of dot-decimal numbers.
std::vector<double> parse_number_list(const std::string& text, const std::string& flag);
double parse_number(const std::string& text, const std::string& flag);

/// 2 for configuration problems, 4 for I/O and ingestion, 3 otherwise.
int exit_code(ErrorCode code);
/// Single-line {code, module, message, context}.
std::string error_json(const Error& error);

/// Full command-line entry point; never throws.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace depthreg::cli
