#include "depthreg/export.hpp"

#include "depthreg/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace depthreg::io {

namespace {

json vec(const Eigen::VectorXd& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

json mat(const Eigen::MatrixXd& m)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.push_back(vec(m.row(i).transpose()));
  return out;
}

json polygon_json(const std::optional<geometry::ConvexPolygon>& polygon)
{
  if (!polygon)
    return nullptr;
  return json::parse(geometry::to_json(*polygon));
}

std::string w0_text(const Eigen::VectorXd& w0)
{
  std::string out;
  for (Eigen::Index i = 0; i < w0.size(); ++i)
    out += (i ? " " : "") + format_number(w0(i));
  return out;
}

// Hex colour on a light-to-dark ramp between two RGB endpoints.
std::string ramp(double t, std::array<int, 3> dark, std::array<int, 3> light)
{
  t = std::clamp(t, 0.0, 1.0);
  std::string out = "#";
  static const char* digits = "0123456789abcdef";
  for (int k = 0; k < 3; ++k) {
    const int c = static_cast<int>(std::lround(dark[k] + t * (light[k] - dark[k])));
    out += digits[c / 16];
    out += digits[c % 16];
  }
  return out;
}

} // namespace

std::string format_number(double value)
{
  if (!std::isfinite(value))
    return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double value, int decimals)
{
  std::array<char, 128> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc{})
    throw Error(ErrorCode::invalid_input, "export", "number too large to format");
  std::string out(buf.data(), res.ptr);
  if (out.rfind("-0.", 0) == 0 && out.find_first_not_of("-0.") == std::string::npos)
    out.erase(0, 1); // no negative zero in file names
  return out;
}

std::string artifact_name(const std::string& command, double tau, double w0, const std::string& ext)
{
  return command + "_" + format_fixed(tau, 4) + "_" + format_fixed(w0, 4) + "." + ext;
}

json fit_record(const estimators::QuantileHyperplane& fit)
{
  json j;
  j["tau"] = fit.tau;
  j["u"] = vec(fit.frame.u);
  j["w0"] = nullptr;
  j["a"] = vec(fit.a);
  j["c"] = vec(fit.c);
  j["a_dot"] = nullptr;
  j["c_dot"] = nullptr;
  j["objective"] = fit.objective;
  j["subgrad_lo"] = fit.subgrad_lo;
  j["subgrad_hi"] = fit.subgrad_hi;
  j["status"] = qr::to_string(fit.status);
  return j;
}

json fit_record(const estimators::LocalConstantFit& fit)
{
  json j;
  j["tau"] = fit.tau;
  j["u"] = vec(fit.frame.u);
  j["w0"] = vec(fit.w0);
  j["a"] = fit.a;
  j["c"] = vec(fit.c);
  j["a_dot"] = nullptr;
  j["c_dot"] = nullptr;
  j["objective"] = fit.objective;
  j["subgrad_lo"] = fit.subgrad_lo;
  j["subgrad_hi"] = fit.subgrad_hi;
  j["status"] = qr::to_string(fit.status);
  return j;
}

json fit_record(const estimators::LocalBilinearFit& fit)
{
  json j;
  j["tau"] = fit.tau;
  j["u"] = vec(fit.frame.u);
  j["w0"] = vec(fit.w0);
  j["a"] = fit.a;
  j["c"] = vec(fit.c);
  j["a_dot"] = vec(fit.a_dot);
  j["c_dot"] = mat(fit.c_dot);
  j["objective"] = fit.objective;
  j["subgrad_lo"] = fit.subgrad_lo;
  j["subgrad_hi"] = fit.subgrad_hi;
  j["status"] = qr::to_string(fit.status);
  return j;
}

json fit_record(const contours::DirectionFit& fit, double tau, const Eigen::VectorXd& w0)
{
  json j;
  j["tau"] = tau;
  j["u"] = vec(fit.u);
  j["w0"] = vec(w0);
  if (fit.ok()) {
    j["a"] = fit.a;
    j["c"] = vec(fit.c);
  } else {
    j["a"] = nullptr;
    j["c"] = nullptr;
  }
  j["a_dot"] = nullptr;
  j["c_dot"] = nullptr;
  j["objective"] = fit.objective;
  j["subgrad_lo"] = fit.subgrad_lo;
  j["subgrad_hi"] = fit.subgrad_hi;
  j["status"] = fit.ok() ? qr::to_string(fit.status) : "failed";
  if (!fit.ok())
    j["error"] = fit.error;
  return j;
}

json contour_json(const contours::CutContour& cut)
{
  json j;
  j["w0"] = vec(cut.w0);
  j["tau"] = cut.tau;
  j["method"] = contours::to_string(cut.method);
  j["bandwidth"] = cut.bandwidth;
  j["polygon"] = polygon_json(cut.polygon);
  j["unbounded_suspect"] = cut.unbounded_suspect;
  j["failed_directions"] = cut.failed_directions;
  j["warnings"] = cut.warnings;
  json dirs = json::array();
  for (const auto& f : cut.per_direction) {
    json d;
    d["u"] = vec(f.u);
    if (f.ok()) {
      d["a"] = f.a;
      d["c"] = vec(f.c);
      d["normal"] = vec(f.normal());
    } else {
      d["a"] = nullptr;
      d["c"] = nullptr;
      d["normal"] = nullptr;
    }
    d["objective"] = f.objective;
    d["subgrad_lo"] = f.subgrad_lo;
    d["subgrad_hi"] = f.subgrad_hi;
    d["status"] = f.ok() ? qr::to_string(f.status) : "failed";
    if (!f.ok())
      d["error"] = f.error;
    dirs.push_back(std::move(d));
  }
  j["per_direction"] = std::move(dirs);
  return j;
}

std::string contour_csv(const std::vector<const contours::CutContour*>& cuts)
{
  std::string out = "w0,tau,vertex_index,y1,y2\n";
  for (const auto* cut : cuts) {
    if (!cut->polygon)
      continue;
    const std::string prefix = w0_text(cut->w0) + "," + format_number(cut->tau) + ",";
    const auto& v = cut->polygon->vertices();
    for (std::size_t k = 0; k < v.size(); ++k)
      out += prefix + std::to_string(k) + "," + format_number(v[k](0)) + "," + format_number(v[k](1)) + "\n";
  }
  return out;
}

std::string svg_overlay(const estimators::Dataset& data, const std::vector<const contours::CutContour*>& cuts)
{
  constexpr double size = 800.0;
  constexpr double margin = 20.0;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto extend = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (Eigen::Index i = 0; i < data.size(); ++i)
    extend(data.responses(i, 0), data.responses(i, 1));
  for (const auto* cut : cuts)
    if (cut->polygon && !cut->unbounded_suspect)
      for (const auto& v : cut->polygon->vertices())
        extend(v(0), v(1));
  if (!std::isfinite(xmin)) {
    xmin = ymin = -1.0;
    xmax = ymax = 1.0;
  }
  const double span = std::max({ xmax - xmin, ymax - ymin, 1e-12 });
  const double k = (size - 2.0 * margin) / span;
  auto px = [&](double x) { return format_fixed(margin + (x - xmin) * k, 3); };
  auto py = [&](double y) { return format_fixed(size - margin - (y - ymin) * k, 3); };

  double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
  if (data.covariates.cols() > 0 && data.size() > 0) {
    wmin = data.covariates.col(0).minCoeff();
    wmax = data.covariates.col(0).maxCoeff();
  }
  for (const auto* cut : cuts)
    if (cut->w0.size() > 0) {
      wmin = std::min(wmin, cut->w0(0));
      wmax = std::max(wmax, cut->w0(0));
    }
  auto level = [&](double w) { return wmax > wmin ? (w - wmin) / (wmax - wmin) : 0.5; };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
  out += "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n<g id=\"points\">\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double t = data.covariates.cols() > 0 ? level(data.covariates(i, 0)) : 0.5;
    out += "<circle cx=\"" + px(data.responses(i, 0)) + "\" cy=\"" + py(data.responses(i, 1)) +
           "\" r=\"1.5\" fill=\"" + ramp(t, { 128, 0, 0 }, { 255, 190, 190 }) + "\"/>\n";
  }
  out += "</g>\n<g id=\"contours\" fill=\"none\" stroke-width=\"1.5\">\n";
  int ring = 0;
  for (const auto* cut : cuts) {
    if (!cut->polygon)
      continue;
    const double t = cut->w0.size() > 0 ? level(cut->w0(0)) : 0.5;
    out += "<polygon id=\"ring-" + std::to_string(ring++) + "\" data-w0=\"" + w0_text(cut->w0) + "\" data-tau=\"" +
           format_number(cut->tau) + "\" stroke=\"" + ramp(t, { 0, 100, 0 }, { 150, 240, 150 }) + "\" points=\"";
    bool first = true;
    for (const auto& v : cut->polygon->vertices()) {
      out += (first ? "" : " ") + px(v(0)) + "," + py(v(1));
      first = false;
    }
    out += "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string experiment_csv(const simlab::RateResult& result)
{
  std::string out = "n,rep,error\n";
  for (const auto& row : result.rows)
    out += std::to_string(row.n) + "," + std::to_string(row.rep) + "," + format_number(row.error) + "\n";
  return out;
}

json experiment_summary(const simlab::RateConfig& config, const simlab::RateResult& result)
{
  json j;
  j["model"] = simlab::to_string(config.model);
  j["w0"] = config.w0;
  j["tau"] = config.tau;
  j["method"] = contours::to_string(config.method);
  j["kernel"] = kernels::to_string(config.kernel);
  j["directions"] = config.directions;
  j["reps"] = config.reps;
  j["seed"] = config.seed;
  j["bandwidth"] = { { "reference_h", config.bandwidth.reference_h },
                     { "reference_n", config.bandwidth.reference_n },
                     { "exponent", config.bandwidth.exponent } };
  json rows = json::array();
  for (const auto& s : result.summary)
    rows.push_back({ { "n", s.n }, { "bandwidth", s.bandwidth }, { "median_error", s.median_error } });
  j["summary"] = std::move(rows);
  return j;
}

std::string dataset_csv(const estimators::Dataset& data)
{
  std::string out;
  for (Eigen::Index j = 0; j < data.covariates.cols(); ++j)
    out += "w" + std::to_string(j + 1) + ",";
  for (Eigen::Index j = 0; j < data.responses.cols(); ++j)
    out += "y" + std::to_string(j + 1) + (j + 1 < data.responses.cols() ? "," : "\n");
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j)
      out += format_number(data.covariates(i, j)) + ",";
    for (Eigen::Index j = 0; j < data.responses.cols(); ++j)
      out += format_number(data.responses(i, j)) + (j + 1 < data.responses.cols() ? "," : "\n");
  }
  return out;
}

void write_text(const std::string& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::io_error, "export", "cannot open output file", path);
  out << content;
  if (!out)
    throw Error(ErrorCode::io_error, "export", "write failed", path);
}

} // namespace depthreg::io
