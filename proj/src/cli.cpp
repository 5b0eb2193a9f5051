#include "depthreg/cli.hpp"

#include "depthreg/contours.hpp"
#include "depthreg/export.hpp"
#include "depthreg/simlab.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#ifndef DEPTHREG_VERSION
#define DEPTHREG_VERSION "0.0.0"
#endif

namespace depthreg::cli {

namespace fs = std::filesystem;

const char* version()
{
  return DEPTHREG_VERSION;
}

namespace {

[[noreturn]] void config_fail(const std::string& message, const std::string& context = {})
{
  throw Error(ErrorCode::config_error, "cli", message, context);
}

std::vector<std::string> split(const std::string& text)
{
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool local_method(contours::Method m)
{
  return m != contours::Method::global;
}

struct Loaded
{
  estimators::Dataset data;
  std::vector<std::string> warnings;
  int dropped_rows = 0;
};

Loaded load_data(const RunConfig& config)
{
  Loaded loaded;
  if (!config.model.empty()) {
    loaded.data = simlab::generate(simlab::make_spec(simlab::parse_model(config.model), config.n, config.seed));
  } else {
    std::vector<std::string> covs;
    if (!config.covariate.empty())
      covs.push_back(config.covariate);
    auto result = simlab::ingest_csv(config.csv, covs, config.responses);
    loaded.data = std::move(result.data);
    loaded.warnings = std::move(result.warnings);
    loaded.dropped_rows = result.dropped_rows;
  }
  return loaded;
}

std::vector<double> resolve_w0s(const RunConfig& config, const estimators::Dataset& data)
{
  if (data.covariates.cols() == 0)
    return {};
  if (!config.w0s.empty())
    return config.w0s;
  std::vector<double> w(data.covariates.col(0).data(), data.covariates.col(0).data() + data.size());
  std::vector<double> out;
  for (double p : config.w0_quantiles)
    out.push_back(simlab::empirical_quantile(w, p));
  return out;
}

kernels::BandwidthPlan make_plan(const RunConfig& config, const estimators::Dataset& data)
{
  const bool fz = config.bandwidth_rule.rfind("fz:", 0) == 0;
  const bool adjust = config.tau_adjust == "on" || (config.tau_adjust == "auto" && fz);
  if (config.bandwidth)
    return kernels::manual_plan(*config.bandwidth, adjust);
  if (config.bandwidth_rule == "thumb")
    return kernels::thumb_plan(data.covariates, adjust);
  if (fz)
    return kernels::fan_zhang_plan(parse_number(config.bandwidth_rule.substr(3), "--bandwidth-rule"), adjust);
  return kernels::manual_plan(1.0, adjust); // unused by the global method
}

std::string join_path(const RunConfig& config, const std::string& name)
{
  return (fs::path(config.out) / name).string();
}

struct Output
{
  const RunConfig& config;
  RunReport& report;

  void write(const std::string& name, const std::string& content)
  {
    io::write_text(join_path(config, name), content);
    report.outputs.push_back(name);
  }
};

void warn(RunReport& report, const std::string& text)
{
  report.warnings.push_back(text);
}

double w0_label(const Eigen::VectorXd& w0)
{
  return w0.size() > 0 ? w0(0) : 0.0;
}

} // namespace

std::vector<double> parse_number_list(const std::string& text, const std::string& flag)
{
  std::vector<double> out;
  for (const auto& item : split(text))
    out.push_back(parse_number(item, flag));
  return out;
}

double parse_number(const std::string& text, const std::string& flag)
{
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+')
    ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
    config_fail("invalid number for " + flag, text);
  return value;
}

int exit_code(ErrorCode code)
{
  switch (code) {
    case ErrorCode::config_error: return 2;
    case ErrorCode::io_error:
    case ErrorCode::ingestion_error: return 4;
    default: return 3;
  }
}

std::string error_json(const Error& error)
{
  json j;
  j["code"] = std::string(to_string(error.code()));
  j["module"] = error.module();
  j["message"] = error.what();
  j["context"] = error.context();
  return j.dump();
}

json to_json(const RunConfig& c)
{
  json j;
  j["command"] = c.command;
  j["csv"] = c.csv;
  j["covariate"] = c.covariate;
  j["responses"] = c.responses;
  j["model"] = c.model;
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["taus"] = c.taus;
  j["w0s"] = c.w0s;
  j["w0_quantiles"] = c.w0_quantiles;
  j["method"] = c.method;
  j["kernel"] = c.kernel;
  j["bandwidth"] = c.bandwidth ? json(*c.bandwidth) : json(nullptr);
  j["bandwidth_rule"] = c.bandwidth_rule;
  j["tau_adjust"] = c.tau_adjust;
  j["directions"] = c.directions;
  j["repair"] = c.repair;
  j["out"] = c.out;
  j["threads"] = c.threads;
  j["dump_lp"] = c.dump_lp;
  j["ns"] = c.ns;
  j["reps"] = c.reps;
  j["bandwidth_exponent"] = c.bandwidth_exponent;
  j["reference_n"] = c.reference_n;
  return j;
}

RunConfig config_from_json(const json& j)
{
  try {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.csv = j.value("csv", "");
    c.covariate = j.value("covariate", "");
    c.responses = j.value("responses", std::vector<std::string>{});
    c.model = j.value("model", "");
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.taus = j.value("taus", c.taus);
    c.w0s = j.value("w0s", c.w0s);
    c.w0_quantiles = j.value("w0_quantiles", c.w0_quantiles);
    c.method = j.value("method", c.method);
    c.kernel = j.value("kernel", c.kernel);
    if (j.contains("bandwidth") && !j["bandwidth"].is_null())
      c.bandwidth = j["bandwidth"].get<double>();
    c.bandwidth_rule = j.value("bandwidth_rule", "");
    c.tau_adjust = j.value("tau_adjust", c.tau_adjust);
    c.directions = j.value("directions", c.directions);
    c.repair = j.value("repair", c.repair);
    c.out = j.value("out", c.out);
    c.threads = j.value("threads", c.threads);
    c.dump_lp = j.value("dump_lp", "");
    c.ns = j.value("ns", c.ns);
    c.reps = j.value("reps", c.reps);
    c.bandwidth_exponent = j.value("bandwidth_exponent", c.bandwidth_exponent);
    c.reference_n = j.value("reference_n", c.reference_n);
    return c;
  } catch (const json::exception& e) {
    config_fail("malformed configuration", e.what());
  }
}

void validate(const RunConfig& c)
{
  static const std::vector<std::string> commands{ "fit", "cut", "family", "simulate", "rate", "ingest-info" };
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    config_fail("unknown command", c.command);

  const bool has_csv = !c.csv.empty();
  const bool has_model = !c.model.empty();
  if (has_csv == has_model)
    config_fail("give exactly one data source: --csv or --model");
  if (has_model)
    simlab::parse_model(c.model);
  if (has_model && c.n < 50)
    config_fail("--n must be at least 50");
  if (has_csv && c.responses.size() < 2)
    config_fail("--responses needs at least two column names");
  if ((c.command == "rate" || c.command == "simulate") && !has_model)
    config_fail(c.command + " requires --model");
  if (c.command == "ingest-info" && !has_csv)
    config_fail("ingest-info requires --csv");

  for (double t : c.taus)
    if (!(t > 0.0 && t < 1.0))
      config_fail("tau values must lie in (0, 1)");
  if (c.taus.empty())
    config_fail("--tau needs at least one value");
  if (c.command == "family")
    for (std::size_t k = 1; k < c.taus.size(); ++k)
      if (!(c.taus[k] > c.taus[k - 1]))
        config_fail("family needs ascending tau values");
  if (c.command == "simulate")
    for (double t : c.taus)
      if (!(t < 0.5))
        config_fail("oracle contours need tau < 0.5");
  for (double p : c.w0_quantiles)
    if (!(p >= 0.0 && p <= 1.0))
      config_fail("--w0-quantiles must lie in [0, 1]");
  if (!c.w0s.empty() && !c.w0_quantiles.empty())
    config_fail("give --w0 or --w0-quantiles, not both");

  const auto method = [&] {
    try {
      return contours::parse_method(c.method);
    } catch (const Error&) {
      config_fail("unknown method", c.method);
    }
  }();
  kernels::parse_family(c.kernel);
  const bool needs_w0 = c.command == "fit" || c.command == "cut" || c.command == "family" || c.command == "simulate";
  const bool has_cov = has_model || !c.covariate.empty();
  if (needs_w0 && has_cov && c.w0s.empty() && c.w0_quantiles.empty())
    config_fail("give --w0 or --w0-quantiles");
  if (needs_w0 && local_method(method) && !has_cov && c.command != "simulate")
    config_fail("local methods need a covariate");

  const int rules = (c.bandwidth ? 1 : 0) + (c.bandwidth_rule.empty() ? 0 : 1);
  if (rules > 1)
    config_fail("give --bandwidth or --bandwidth-rule, not both");
  if (c.bandwidth && !(*c.bandwidth > 0.0))
    config_fail("--bandwidth must be positive");
  if (!c.bandwidth_rule.empty() && c.bandwidth_rule != "thumb") {
    if (c.bandwidth_rule.rfind("fz:", 0) != 0)
      config_fail("--bandwidth-rule must be thumb or fz:<h>", c.bandwidth_rule);
    if (!(parse_number(c.bandwidth_rule.substr(3), "--bandwidth-rule") > 0.0))
      config_fail("fz bandwidth must be positive");
  }
  const bool fits = c.command == "fit" || c.command == "cut" || c.command == "family" || c.command == "rate";
  if (fits && local_method(method) && rules == 0)
    config_fail("local methods need --bandwidth or --bandwidth-rule");
  if (c.command == "rate" && !c.bandwidth)
    config_fail("rate needs --bandwidth (the reference bandwidth at --reference-n)");
  if (c.tau_adjust != "on" && c.tau_adjust != "off" && c.tau_adjust != "auto")
    config_fail("--tau-adjust must be on or off", c.tau_adjust);
  if (c.directions < 3)
    config_fail("--directions must be at least 3");
  if (c.threads < 1)
    config_fail("--threads must be at least 1");

  if (c.command == "rate") {
    if (c.ns.empty() || !std::is_sorted(c.ns.begin(), c.ns.end()) || c.ns.front() < 50)
      config_fail("--ns must be ascending sizes of at least 50");
    if (c.reps < 1)
      config_fail("--reps must be positive");
    if (c.taus.size() != 1 || c.w0s.size() > 1 || !c.w0_quantiles.empty())
      config_fail("rate takes one --tau and at most one --w0");
    if (!(c.reference_n > 0.0))
      config_fail("--reference-n must be positive");
  }
}

RunReport run(const RunConfig& config, std::ostream& out)
{
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunReport report;

  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec || !fs::is_directory(config.out))
    throw Error(ErrorCode::io_error, "cli", "cannot create output directory", config.out);
  Output output{ config, report };

  const auto method = contours::parse_method(config.method);
  const auto family = kernels::parse_family(config.kernel);

  if (config.command == "rate") {
    simlab::RateConfig rc;
    rc.model = simlab::parse_model(config.model);
    rc.w0 = config.w0s.empty() ? 0.0 : config.w0s.front();
    rc.tau = config.taus.front();
    rc.method = method;
    rc.ns = config.ns;
    rc.reps = config.reps;
    rc.bandwidth = { *config.bandwidth, config.reference_n, config.bandwidth_exponent };
    rc.kernel = family;
    rc.directions = config.directions;
    rc.seed = config.seed;
    rc.threads = config.threads;
    const auto result = simlab::rate_experiment(rc);
    output.write("rate_results.csv", io::experiment_csv(result));
    output.write("rate_summary.json", io::experiment_summary(rc, result).dump(2) + "\n");
  } else {
    auto loaded = load_data(config);
    for (auto& w : loaded.warnings)
      warn(report, w);
    const auto& data = loaded.data;
    const auto w0s = resolve_w0s(config, data);
    const int covs = static_cast<int>(data.covariates.cols());
    std::vector<Eigen::VectorXd> w0_points;
    if (covs == 0)
      w0_points.emplace_back(0);
    for (double w : w0s)
      w0_points.push_back(Eigen::VectorXd::Constant(1, w));

    if (config.command == "ingest-info") {
      json info;
      info["n"] = data.size();
      info["dropped_rows"] = loaded.dropped_rows;
      info["covariate"] = config.covariate;
      info["responses"] = config.responses;
      if (covs > 0) {
        const Eigen::VectorXd w = data.covariates.col(0);
        info["covariate_min"] = w.minCoeff();
        info["covariate_max"] = w.maxCoeff();
        if (data.size() >= 2 && (w.array() != w(0)).any())
          info["rule_of_thumb_bandwidth"] = kernels::rule_of_thumb_bandwidth(w);
        info["w0"] = w0s;
      }
      output.write("ingest_info.json", info.dump(2) + "\n");
      out << info.dump() << "\n";
    } else if (config.command == "simulate") {
      const auto spec = simlab::make_spec(simlab::parse_model(config.model), config.n, config.seed);
      const auto oracle = simlab::oracle_for(spec);
      output.write("simulate_data.csv", io::dataset_csv(data));
      std::vector<contours::CutContour> rings;
      for (const auto& w0 : w0_points)
        for (double tau : config.taus) {
          contours::CutContour ring;
          ring.w0 = w0;
          ring.tau = tau;
          ring.method = contours::Method::global;
          ring.polygon = simlab::oracle_contour(oracle, w0(0), tau, config.directions);
          rings.push_back(std::move(ring));
        }
      std::vector<const contours::CutContour*> ptrs;
      for (const auto& r : rings) {
        ptrs.push_back(&r);
        output.write(io::artifact_name("simulate", r.tau, r.w0(0), "csv"), io::contour_csv({ &r }));
      }
      output.write("simulate_overlay.svg", io::svg_overlay(data, ptrs));
    } else {
      const auto plan = make_plan(config, data);
      const auto kernel = kernels::make_kernel(family, std::max(1, covs));
      const auto grid = geometry::direction_grid(data.m(), config.directions);
      contours::CutOptions options;
      options.threads = config.threads;
      options.dump_path = config.dump_lp;

      if (config.command == "fit") {
        estimators::FitOptions fo;
        fo.dump_path = config.dump_lp;
        for (const auto& w0 : w0_points)
          for (double tau : config.taus) {
            json records = json::array();
            const Eigen::VectorXd weights = local_method(method)
                                              ? kernels::local_weights(data.covariates, w0, kernel, plan.at(tau))
                                              : Eigen::VectorXd::Ones(data.size());
            for (const auto& frame : grid.directions) {
              switch (method) {
                case contours::Method::local_constant:
                  records.push_back(io::fit_record(estimators::fit_local_constant(data, tau, frame, w0, weights, fo)));
                  break;
                case contours::Method::local_bilinear:
                  records.push_back(io::fit_record(estimators::fit_local_bilinear(data, tau, frame, w0, weights, fo)));
                  break;
                case contours::Method::global: {
                  auto rec = io::fit_record(estimators::fit_global(data, tau, frame, weights, fo));
                  rec["w0"] = std::vector<double>(w0.data(), w0.data() + w0.size());
                  records.push_back(std::move(rec));
                  break;
                }
              }
            }
            output.write(io::artifact_name("fit", tau, w0_label(w0), "json"), records.dump(2) + "\n");
          }
      } else {
        std::vector<contours::CutContour> cuts;
        for (const auto& w0 : w0_points) {
          if (config.command == "family") {
            auto fam = contours::build_family(data, config.taus, w0, grid, kernel, plan, method, config.repair, options);
            for (auto& c : fam.contours)
              cuts.push_back(std::move(c));
          } else {
            for (double tau : config.taus)
              cuts.push_back(contours::build_cut(data, tau, w0, grid, kernel, plan.at(tau), method, options));
          }
        }
        std::vector<const contours::CutContour*> ptrs;
        for (const auto& c : cuts) {
          ptrs.push_back(&c);
          for (const auto& w : c.warnings)
            warn(report, "tau " + io::format_number(c.tau) + ", w0 " + io::format_number(w0_label(c.w0)) + ": " + w);
          if (!c.polygon)
            warn(report, "tau " + io::format_number(c.tau) + ", w0 " + io::format_number(w0_label(c.w0)) + ": empty contour");
          if (c.unbounded_suspect)
            warn(report, "tau " + io::format_number(c.tau) + ", w0 " + io::format_number(w0_label(c.w0)) +
                                ": contour reaches the bounding box, region may be unbounded");
          output.write(io::artifact_name(config.command, c.tau, w0_label(c.w0), "csv"), io::contour_csv({ &c }));
          output.write(io::artifact_name(config.command, c.tau, w0_label(c.w0), "json"),
                       io::contour_json(c).dump(2) + "\n");
        }
        output.write(config.command + "_overlay.svg", io::svg_overlay(data, ptrs));
      }
    }
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest;
  manifest["tool"] = "depthreg";
  manifest["version"] = version();
  manifest["config"] = to_json(config);
  manifest["outputs"] = report.outputs;
  manifest["warnings"] = report.warnings;
  manifest["wall_time_seconds"] = wall;
  io::write_text(join_path(config, "manifest.json"), manifest.dump(2) + "\n");
  report.manifest = std::move(manifest);
  return report;
}

namespace {

void add_common(CLI::App* sub, RunConfig& c, std::map<std::string, std::string>& raw)
{
  sub->add_option("--csv", c.csv, "input CSV file (header row required)");
  sub->add_option("--covariate", c.covariate, "covariate column name");
  sub->add_option("--responses", raw["responses"], "two response column names, comma separated");
  sub->add_option("--model", c.model, "simulation model: parab_sine, parab_homo or parab_quad");
  sub->add_option("--n", raw["n"], "simulated sample size");
  sub->add_option("--seed", raw["seed"], "random seed (unsigned 64-bit)");
  sub->add_option("--tau", raw["tau"], "comma-separated tau levels");
  sub->add_option("--w0", raw["w0"], "comma-separated covariate values");
  sub->add_option("--w0-quantiles", raw["w0_quantiles"], "covariate values as empirical quantile levels");
  sub->add_option("--method", c.method, "constant, bilinear or global");
  sub->add_option("--kernel", c.kernel, "gaussian, epanechnikov or uniform");
  sub->add_option("--bandwidth", raw["bandwidth"], "fixed bandwidth");
  sub->add_option("--bandwidth-rule", c.bandwidth_rule, "thumb or fz:<h>");
  sub->add_option("--tau-adjust", c.tau_adjust, "on or off (default: on for fz:<h> only)");
  sub->add_option("--directions", raw["directions"], "number of directions on the circle");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", raw["threads"], "worker threads (fallback: DEPTHREG_THREADS)");
  sub->add_option("--dump-lp", c.dump_lp, "append solver traces to this file");
}

int parse_int(const std::string& text, const std::string& flag)
{
  const double v = parse_number(text, flag);
  if (v != std::floor(v) || std::abs(v) > 2e9)
    config_fail("expected an integer for " + flag, text);
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& text)
{
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    config_fail("invalid --seed", text);
  return v;
}

void apply_raw(RunConfig& c, const std::map<std::string, std::string>& raw)
{
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = raw.find(k);
    return it != raw.end() && !it->second.empty() ? &it->second : nullptr;
  };
  if (auto s = get("responses"))
    c.responses = split(*s);
  if (auto s = get("n"))
    c.n = parse_int(*s, "--n");
  if (auto s = get("seed"))
    c.seed = parse_seed(*s);
  if (auto s = get("tau"))
    c.taus = parse_number_list(*s, "--tau");
  if (auto s = get("w0"))
    c.w0s = parse_number_list(*s, "--w0");
  if (auto s = get("w0_quantiles"))
    c.w0_quantiles = parse_number_list(*s, "--w0-quantiles");
  if (auto s = get("bandwidth"))
    c.bandwidth = parse_number(*s, "--bandwidth");
  if (auto s = get("directions"))
    c.directions = parse_int(*s, "--directions");
  if (auto s = get("ns")) {
    c.ns.clear();
    for (double v : parse_number_list(*s, "--ns"))
      c.ns.push_back(parse_int(io::format_number(v), "--ns"));
  }
  if (auto s = get("reps"))
    c.reps = parse_int(*s, "--reps");
  if (auto s = get("bandwidth_exponent"))
    c.bandwidth_exponent = parse_number(*s, "--bandwidth-exponent");
  if (auto s = get("reference_n"))
    c.reference_n = parse_number(*s, "--reference-n");
  if (auto s = get("repair")) {
    if (*s != "on" && *s != "off")
      config_fail("--repair must be on or off", *s);
    c.repair = *s == "on";
  }
  if (auto s = get("threads")) {
    c.threads = parse_int(*s, "--threads");
  } else if (const char* env = std::getenv("DEPTHREG_THREADS"); env && *env) {
    c.threads = parse_int(env, "DEPTHREG_THREADS");
  }
}

} // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err)
{
  try {
    CLI::App app{ "Local quantile and halfspace-depth regression for bivariate responses" };
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    RunConfig config;
    std::map<std::string, std::string> raw;
    std::string manifest_path;
    std::string replay_out;

    const std::vector<std::pair<std::string, std::string>> commands{
      { "fit", "fit directional quantile hyperplanes and write one JSON record per direction" },
      { "cut", "compute w0-cuts (one polygon per tau and w0)" },
      { "family", "compute nested cut families per w0" },
      { "simulate", "generate a model dataset and its population contours" },
      { "rate", "Monte Carlo error of the cut against the population contour" },
      { "ingest-info", "summarize a CSV file" },
    };
    for (const auto& [name, help] : commands) {
      auto* sub = app.add_subcommand(name, help);
      add_common(sub, config, raw);
      if (name == "family")
        sub->add_option("--repair", raw["repair"], "intersect with lower-tau contours: on or off");
      if (name == "rate") {
        sub->add_option("--ns", raw["ns"], "ascending sample sizes");
        sub->add_option("--reps", raw["reps"], "replications per sample size");
        sub->add_option("--bandwidth-exponent", raw["bandwidth_exponent"], "h = bandwidth * (n / reference-n)^exponent");
        sub->add_option("--reference-n", raw["reference_n"], "sample size at which --bandwidth applies");
      }
    }
    auto* replay = app.add_subcommand("replay", "re-run the configuration echoed in a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    replay->add_option("--out", replay_out, "output directory (default: the manifest's)");
    replay->add_option("--threads", raw["threads"], "worker threads");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorCode::config_error, "cli", e.what());
    }

    if (replay->parsed()) {
      std::ifstream in(manifest_path);
      if (!in)
        throw Error(ErrorCode::io_error, "cli", "cannot open manifest", manifest_path);
      json manifest;
      try {
        manifest = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, "cli", "manifest is not valid JSON", e.what());
      }
      if (!manifest.contains("config"))
        throw Error(ErrorCode::config_error, "cli", "manifest has no config section", manifest_path);
      config = config_from_json(manifest["config"]);
      if (!replay_out.empty())
        config.out = replay_out;
      if (!raw["threads"].empty())
        config.threads = parse_int(raw["threads"], "--threads");
    } else {
      config.command = app.get_subcommands().front()->get_name();
      apply_raw(config, raw);
    }

    const auto report = run(config, out);
    for (const auto& w : report.warnings)
      err << "warning: " << w << "\n";
    return 0;
  } catch (const Error& e) {
    err << error_json(e) << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << error_json(Error(ErrorCode::solver_failure, "cli", e.what())) << std::endl;
    return 3;
  }
}

} // namespace depthreg::cli
