#pragma once

// Power-law fits of a metric against parameter count: pooled and per-seed
// exponents, exponent comparison, local finite-difference exponents and
// saturation labels.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalelens/record.hpp"
#include "scalelens/stats.hpp"

namespace scalelens {

enum class Metric { error_rate, train_loss };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct ScalingPoint {
  std::int64_t n_params = 0;
  double metric_value = 0.0;
  std::int64_t seed = 0;
  std::string config_id;
};

struct ScalingFit {
  Metric metric = Metric::error_rate;
  /// Negated log-log slope: positive when the metric falls with size.
  double alpha = 0.0;
  /// Natural-log intercept of the pooled fit.
  double intercept = 0.0;
  double r_squared = 0.0;
  /// Number of seed-mean points in the pooled fit.
  std::size_t n_points = 0;

  // Present only when every seed covers every config and there are >= 2 seeds.
  std::vector<std::int64_t> seeds;
  std::vector<double> per_seed_alphas;
  std::vector<double> per_seed_r_squared;
  std::optional<double> alpha_mean;
  std::optional<double> alpha_std;
  std::optional<Interval> alpha_ci95;

  std::vector<std::string> warnings;
};

/// OLS of ln(metric) on ln(n_params) over seed-mean points, plus one fit per
/// seed. Throws AnalysisError for < 3 distinct sizes or a nonpositive metric.
ScalingFit fit_power_law(const std::vector<ScalingPoint>& points, Metric metric);

struct ExponentComparison {
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

/// Pooled-variance (Student) two-sample t-test on per-seed exponents.
ExponentComparison compare_exponents(const ScalingFit& a, const ScalingFit& b);

struct LocalExponent {
  std::string config_lo;
  std::string config_hi;
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  double alpha_local = 0.0;
  /// Filled only when both configs were evaluated on the same seed set.
  std::vector<double> per_seed_values;
};

/// Finite-difference exponents between adjacent sizes, ordered by size.
/// Throws AnalysisError on fewer than 2 configs or tied n_params.
std::vector<LocalExponent> local_exponents(const std::vector<ScalingPoint>& points);

enum class SaturationLabel { scaling, diminishing, saturated };

std::string_view to_string(SaturationLabel label);

struct SaturationThresholds {
  double saturated = 0.01;
  double diminishing = 0.05;
};

/// A value exactly on a threshold takes the lower label.
SaturationLabel classify_saturation(double alpha_local, const SaturationThresholds& t = {});
std::vector<SaturationLabel> classify_saturation(const std::vector<LocalExponent>& locals,
                                                 const SaturationThresholds& t = {});

/// Scaling points for one architecture from a corpus. train_loss requires
/// final_train_loss on every record.
std::vector<ScalingPoint> scaling_points(const Corpus& corpus, std::string_view arch, Metric metric);

}  // namespace scalelens
