#pragma once

#include "depthreg/contours.hpp"
#include "depthreg/estimators.hpp"
#include "depthreg/simlab.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace depthreg::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal, independent of the C locale.
std::string format_number(double value);
/// Fixed-point with `decimals` digits, independent of the C locale.
std::string format_fixed(double value, int decimals);

/// {command}_{tau}_{w0}.{ext}, four decimals for tau and w0.
std::string artifact_name(const std::string& command, double tau, double w0, const std::string& ext);

// Fit records {tau, u, w0, a, c, a_dot, c_dot, objective, subgrad_lo, subgrad_hi, status}.
json fit_record(const estimators::QuantileHyperplane& fit);
json fit_record(const estimators::LocalConstantFit& fit);
json fit_record(const estimators::LocalBilinearFit& fit);
json fit_record(const contours::DirectionFit& fit, double tau, const Eigen::VectorXd& w0);

json contour_json(const contours::CutContour& cut);

/// Header w0,tau,vertex_index,y1,y2; one block per non-empty contour.
std::string contour_csv(const std::vector<const contours::CutContour*>& cuts);

/// Data points (red, lighter for larger first covariate) and every non-empty
/// contour ring once (green, lighter for larger w0).
std::string svg_overlay(const estimators::Dataset& data, const std::vector<const contours::CutContour*>& cuts);

std::string experiment_csv(const simlab::RateResult& result);
json experiment_summary(const simlab::RateConfig& config, const simlab::RateResult& result);

std::string dataset_csv(const estimators::Dataset& data);

void write_text(const std::string& path, const std::string& content);

} // namespace depthreg::io
