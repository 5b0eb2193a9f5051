#pragma once

#include "depthreg/contours.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace depthreg::simlab {

using estimators::Dataset;

enum class Model
{
  parab_sine, // (W, W^2) + (1 + 1.5 sin^2(pi W / 2)) eps, eps ~ N(0, I)
  parab_homo, // (W, W^2) + eps,                       eps ~ N(0, I / 4)
  parab_quad  // (W, W^2) + (1 + W^2) eps,             eps ~ N(0, I / 4)
};

Model parse_model(const std::string& name);
const char* to_string(Model model);

/// Marginal sd of each error coordinate in the named model.
double default_noise_scale(Model model);

struct ModelSpec
{
  Model model = Model::parab_sine;
  int n = 999;
  std::uint64_t seed = 1;
  double noise_scale = 1.0;
};

/// ModelSpec with the model's own noise scale.
ModelSpec make_spec(Model model, int n, std::uint64_t seed);

// --- random numbers -------------------------------------------------------
//
// std::mt19937_64 (fully specified by the C++ standard) seeded with one
// 64-bit value. Replication r of an experiment seeded s uses
// stream_seed(s, r) = splitmix64(s + (r + 1) * 0x9e3779b97f4a7c15).
// Uniforms take the top 53 bits; normals are the inverse normal CDF of a
// midpoint uniform, so every draw is a pure function of the bit stream.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {
  }
  /// In [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

/// One covariate column W ~ U[-2, 2]; responses per the model. Draw order per
/// observation: W, eps_1, eps_2.
Dataset generate(const ModelSpec& spec);

/// Conditional scale multiplying eps at W = w.
double conditional_scale(Model model, double w);

struct PopulationOracle
{
  Model model = Model::parab_sine;
  double noise_scale = 1.0;

  Eigen::Vector2d center(double w0) const { return { w0, w0 * w0 }; }
  double scale(double w0) const { return conditional_scale(model, w0); }
  /// Radius of the depth region at level tau (tau < 0.5).
  double radius(double w0, double tau) const;
};

PopulationOracle oracle_for(const ModelSpec& spec);

/// Regular M-gon inscribed in the population circle.
geometry::ConvexPolygon oracle_contour(const PopulationOracle& oracle, double w0, double tau, int count);

/// Conditional draws of Y given W = w0 (n x 2).
Eigen::MatrixXd conditional_sample(const PopulationOracle& oracle, double w0, int n, std::uint64_t seed);

/// {-1.89, -1.83, ..., 1.89}.
std::vector<double> figure_w0_grid();

// --- Monte Carlo ------------------------------------------------------------

/// h(n) = reference_h * (n / reference_n)^exponent; exponent 0 keeps h fixed.
struct BandwidthSchedule
{
  double reference_h = 0.37;
  double reference_n = 999.0;
  double exponent = -0.2;

  double at(int n) const;
};

struct RateConfig
{
  Model model = Model::parab_homo;
  double w0 = 0.0;
  double tau = 0.2;
  contours::Method method = contours::Method::local_bilinear;
  std::vector<int> ns{ 500, 2000, 8000 };
  int reps = 20;
  BandwidthSchedule bandwidth;
  kernels::KernelFamily kernel = kernels::KernelFamily::gaussian;
  int directions = 360;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct RateRow
{
  int n = 0;
  int rep = 0;
  double error = 0.0; // +inf when the cut came out empty
};

struct RateSummary
{
  int n = 0;
  double bandwidth = 0.0;
  double median_error = 0.0;
};

struct RateResult
{
  std::vector<RateSummary> summary;
  std::vector<RateRow> rows;
};

/// Dataset for replication `rep` at sample size index `size_index`.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t size_index, int rep);

/// For each n: reps datasets, one cut each, Hausdorff distance to the oracle
/// polygon. Deterministic given the config, whatever the thread count.
RateResult rate_experiment(const RateConfig& config);

double median(std::vector<double> values);

/// Linear interpolation between order statistics (x_(1) at p = 0, x_(n) at p = 1).
double empirical_quantile(std::vector<double> values, double p);

// --- CSV ingestion ------------------------------------------------------------

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180: comma separated, optional double-quoted fields with "" escapes,
/// CRLF or LF line ends. First record is the header.
CsvTable parse_csv(std::istream& in);

struct IngestResult
{
  Dataset data;
  int dropped_rows = 0;
  std::vector<std::string> warnings;
};

/// Selects columns by header name. Rows with an empty (or NA) cell in any
/// selected column are dropped and counted; any other non-numeric cell is an
/// ingestion_error naming the row and column.
IngestResult ingest_csv(std::istream& in,
                        const std::vector<std::string>& covariate_columns,
                        const std::vector<std::string>& response_columns);

IngestResult ingest_csv(const std::string& path,
                        const std::vector<std::string>& covariate_columns,
                        const std::vector<std::string>& response_columns);

} // namespace depthreg::simlab
