#include "depthreg/simlab.hpp"

#include "depthreg/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <thread>

namespace depthreg::simlab {

Model parse_model(const std::string& name)
{
  if (name == "parab_sine")
    return Model::parab_sine;
  if (name == "parab_homo")
    return Model::parab_homo;
  if (name == "parab_quad")
    return Model::parab_quad;
  throw Error(ErrorCode::config_error, "simlab", "unknown model", name);
}

const char* to_string(Model model)
{
  switch (model) {
    case Model::parab_sine: return "parab_sine";
    case Model::parab_homo: return "parab_homo";
    case Model::parab_quad: return "parab_quad";
  }
  return "unknown";
}

double default_noise_scale(Model model)
{
  return model == Model::parab_sine ? 1.0 : 0.5;
}

ModelSpec make_spec(Model model, int n, std::uint64_t seed)
{
  return ModelSpec{ model, n, seed, default_noise_scale(model) };
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream)
{
  return splitmix64(seed + (stream + 1) * 0x9e3779b97f4a7c15ULL);
}

double Rng::uniform()
{
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
  const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  return kernels::normal_quantile(u);
}

double conditional_scale(Model model, double w)
{
  switch (model) {
    case Model::parab_sine: {
      const double s = std::sin(0.5 * std::numbers::pi * w);
      return 1.0 + 1.5 * s * s;
    }
    case Model::parab_homo: return 1.0;
    case Model::parab_quad: return 1.0 + w * w;
  }
  return 1.0;
}

Dataset generate(const ModelSpec& spec)
{
  if (spec.n < 50)
    throw Error(ErrorCode::invalid_input, "simlab", "model sample size must be at least 50");
  if (!(spec.noise_scale > 0.0) || !std::isfinite(spec.noise_scale))
    throw Error(ErrorCode::invalid_input, "simlab", "noise scale must be positive");
  Rng rng(spec.seed);
  Dataset data;
  data.covariates.resize(spec.n, 1);
  data.responses.resize(spec.n, 2);
  for (int i = 0; i < spec.n; ++i) {
    const double w = rng.uniform(-2.0, 2.0);
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    const double s = conditional_scale(spec.model, w) * spec.noise_scale;
    data.covariates(i, 0) = w;
    data.responses(i, 0) = w + s * e1;
    data.responses(i, 1) = w * w + s * e2;
  }
  return data;
}

double PopulationOracle::radius(double w0, double tau) const
{
  return scale(w0) * noise_scale * kernels::normal_quantile(1.0 - tau);
}

PopulationOracle oracle_for(const ModelSpec& spec)
{
  return PopulationOracle{ spec.model, spec.noise_scale };
}

geometry::ConvexPolygon oracle_contour(const PopulationOracle& oracle, double w0, double tau, int count)
{
  if (!(tau > 0.0 && tau < 0.5))
    throw Error(ErrorCode::invalid_input, "simlab", "oracle contour needs tau in (0, 0.5)");
  return geometry::regular_polygon(oracle.center(w0), oracle.radius(w0, tau), count);
}

Eigen::MatrixXd conditional_sample(const PopulationOracle& oracle, double w0, int n, std::uint64_t seed)
{
  Rng rng(seed);
  const double s = oracle.scale(w0) * oracle.noise_scale;
  const Eigen::Vector2d c = oracle.center(w0);
  Eigen::MatrixXd y(n, 2);
  for (int i = 0; i < n; ++i) {
    y(i, 0) = c(0) + s * rng.normal();
    y(i, 1) = c(1) + s * rng.normal();
  }
  return y;
}

std::vector<double> figure_w0_grid()
{
  std::vector<double> grid;
  for (int k = 0; k <= 63; ++k)
    grid.push_back(std::round((-1.89 + 0.06 * k) * 1e6) / 1e6);
  return grid;
}

double BandwidthSchedule::at(int n) const
{
  return reference_h * std::pow(static_cast<double>(n) / reference_n, exponent);
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t size_index, int rep)
{
  return stream_seed(stream_seed(seed, size_index), static_cast<std::uint64_t>(rep));
}

double median(std::vector<double> values)
{
  if (values.empty())
    throw Error(ErrorCode::invalid_input, "simlab", "median of an empty list");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1)
    return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double empirical_quantile(std::vector<double> values, double p)
{
  if (values.empty())
    throw Error(ErrorCode::invalid_input, "simlab", "quantile of an empty list");
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::invalid_input, "simlab", "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RateResult rate_experiment(const RateConfig& config)
{
  if (config.ns.empty() || !std::is_sorted(config.ns.begin(), config.ns.end()))
    throw Error(ErrorCode::invalid_input, "simlab", "sample sizes must be ascending");
  if (config.reps < 1)
    throw Error(ErrorCode::invalid_input, "simlab", "need at least one replication");

  const auto grid = geometry::direction_grid(2, config.directions);
  const auto kernel = kernels::make_kernel(config.kernel, 1);
  const PopulationOracle oracle{ config.model, default_noise_scale(config.model) };
  const auto truth = oracle_contour(oracle, config.w0, config.tau, config.directions);
  const Eigen::VectorXd w0 = Eigen::VectorXd::Constant(1, config.w0);

  const std::size_t sizes = config.ns.size();
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  std::vector<double> errors(sizes * reps);

  auto run_task = [&](std::size_t task) {
    const std::size_t s = task / reps;
    const int rep = static_cast<int>(task % reps);
    const auto spec = make_spec(config.model, config.ns[s], replication_seed(config.seed, s, rep));
    const auto data = generate(spec);
    const auto cut =
      contours::build_cut(data, config.tau, w0, grid, kernel, config.bandwidth.at(spec.n), config.method);
    errors[task] = cut.polygon ? geometry::hausdorff_distance(*cut.polygon, truth)
                               : std::numeric_limits<double>::infinity();
  };

  const std::size_t tasks = errors.size();
  const int threads = std::clamp(config.threads, 1, static_cast<int>(tasks));
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks; ++t)
      run_task(t);
  } else {
    std::atomic<std::size_t> next{ 0 };
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k)
      pool.emplace_back([&, k] {
        try {
          for (std::size_t t = next++; t < tasks; t = next++)
            run_task(t);
        } catch (...) {
          failures[static_cast<std::size_t>(k)] = std::current_exception();
        }
      });
    for (auto& th : pool)
      th.join();
    for (auto& f : failures)
      if (f)
        std::rethrow_exception(f);
  }

  RateResult result;
  for (std::size_t s = 0; s < sizes; ++s) {
    std::vector<double> row(errors.begin() + static_cast<std::ptrdiff_t>(s * reps),
                            errors.begin() + static_cast<std::ptrdiff_t>((s + 1) * reps));
    result.summary.push_back({ config.ns[s], config.bandwidth.at(config.ns[s]), median(row) });
    for (std::size_t r = 0; r < reps; ++r)
      result.rows.push_back({ config.ns[s], static_cast<int>(r), row[r] });
  }
  return result;
}

// --- CSV ----------------------------------------------------------------------

CsvTable parse_csv(std::istream& in)
{
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false; // distinguishes an empty last field from no field
  char ch;
  long line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (field_started || !record.empty())
      end_field();
    if (!record.empty())
      records.push_back(std::move(record));
    record.clear();
  };

  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n')
          ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty())
          throw Error(ErrorCode::ingestion_error, "simlab", "stray quote inside an unquoted field",
                      "line " + std::to_string(line));
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        if (in.peek() == '\n')
          in.get(ch);
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += ch;
        field_started = true;
    }
  }
  if (in_quotes)
    throw Error(ErrorCode::ingestion_error, "simlab", "unterminated quoted field", "line " + std::to_string(line));
  end_record();

  if (records.empty())
    throw Error(ErrorCode::ingestion_error, "simlab", "CSV has no header row");
  CsvTable table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return table;
}

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell)
{
  return cell.empty() || cell == "NA" || cell == "na" || cell == "N/A";
}

} // namespace

IngestResult ingest_csv(std::istream& in,
                        const std::vector<std::string>& covariate_columns,
                        const std::vector<std::string>& response_columns)
{
  const auto table = parse_csv(in);
  std::vector<std::size_t> index;
  std::vector<std::string> names = covariate_columns;
  names.insert(names.end(), response_columns.begin(), response_columns.end());
  if (response_columns.size() < 2)
    throw Error(ErrorCode::ingestion_error, "simlab", "need at least two response columns");
  for (const auto& name : names) {
    std::size_t k = 0;
    while (k < table.header.size() && trim(table.header[k]) != name)
      ++k;
    if (k == table.header.size())
      throw Error(ErrorCode::ingestion_error, "simlab", "missing column", name);
    index.push_back(k);
  }

  IngestResult result;
  std::vector<std::vector<double>> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "row " + std::to_string(r + 1);
    std::vector<double> values;
    bool missing = false;
    for (std::size_t j = 0; j < names.size(); ++j) {
      const std::string cell = index[j] < row.size() ? trim(row[index[j]]) : std::string{};
      if (is_missing(cell)) {
        missing = true;
        break;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (*first == '+')
        ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw Error(ErrorCode::ingestion_error, "simlab", "non-numeric cell",
                    where + ", column " + names[j] + ": '" + cell + "'");
      values.push_back(v);
    }
    if (missing) {
      ++result.dropped_rows;
      continue;
    }
    kept.push_back(std::move(values));
  }
  if (result.dropped_rows > 0)
    result.warnings.push_back("dropped " + std::to_string(result.dropped_rows) + " row(s) with missing values");

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto pc = static_cast<Eigen::Index>(covariate_columns.size());
  const auto m = static_cast<Eigen::Index>(response_columns.size());
  result.data.covariates.resize(n, pc);
  result.data.responses.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = kept[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < pc; ++j)
      result.data.covariates(i, j) = v[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < m; ++j)
      result.data.responses(i, j) = v[static_cast<std::size_t>(pc + j)];
  }
  return result;
}

IngestResult ingest_csv(const std::string& path,
                        const std::vector<std::string>& covariate_columns,
                        const std::vector<std::string>& response_columns)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::io_error, "simlab", "cannot open CSV file", path);
  return ingest_csv(in, covariate_columns, response_columns);
}

} // namespace depthreg::simlab
