#include "scalelens/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

namespace scalelens {

std::string_view to_string(Metric metric) {
  return metric == Metric::error_rate ? "error_rate" : "train_loss";
}

Metric metric_from_string(std::string_view name) {
  if (name == "error_rate") return Metric::error_rate;
  if (name == "train_loss") return Metric::train_loss;
  throw ValidationError(fmt::format("unknown metric '{}'", name));
}

std::string_view to_string(SaturationLabel label) {
  switch (label) {
    case SaturationLabel::scaling: return "scaling";
    case SaturationLabel::diminishing: return "diminishing";
    case SaturationLabel::saturated: return "saturated";
  }
  return "";
}

namespace {

struct ConfigMean {
  std::string config_id;
  std::int64_t n_params = 0;
  double mean_metric = 0.0;
  std::map<std::int64_t, double> by_seed;
};

// Seed-mean metric per config, ordered by n_params then config_id.
std::vector<ConfigMean> config_means(const std::vector<ScalingPoint>& points) {
  std::map<std::string, ConfigMean> by_config;
  for (const auto& p : points) {
    if (p.n_params <= 0)
      throw AnalysisError(fmt::format("config '{}': n_params must be positive", p.config_id));
    if (!(p.metric_value > 0.0) || !std::isfinite(p.metric_value))
      throw AnalysisError(fmt::format("config '{}' seed {}: metric must be positive and finite, got {}",
                                      p.config_id, p.seed, p.metric_value));
    auto& cm = by_config[p.config_id];
    if (cm.by_seed.empty()) {
      cm.config_id = p.config_id;
      cm.n_params = p.n_params;
    } else if (cm.n_params != p.n_params) {
      throw AnalysisError(fmt::format("config '{}' has inconsistent n_params", p.config_id));
    }
    if (!cm.by_seed.emplace(p.seed, p.metric_value).second)
      throw AnalysisError(fmt::format("config '{}' has duplicate seed {}", p.config_id, p.seed));
  }
  std::vector<ConfigMean> out;
  for (auto& [id, cm] : by_config) {
    double s = 0.0;
    for (const auto& [seed, v] : cm.by_seed) s += v;
    cm.mean_metric = s / static_cast<double>(cm.by_seed.size());
    out.push_back(std::move(cm));
  }
  std::sort(out.begin(), out.end(), [](const ConfigMean& a, const ConfigMean& b) {
    return std::tie(a.n_params, a.config_id) < std::tie(b.n_params, b.config_id);
  });
  return out;
}

std::set<std::int64_t> seed_set(const ConfigMean& cm) {
  std::set<std::int64_t> s;
  for (const auto& [seed, v] : cm.by_seed) s.insert(seed);
  return s;
}

}  // namespace

ScalingFit fit_power_law(const std::vector<ScalingPoint>& points, Metric metric) {
  const auto configs = config_means(points);
  std::set<std::int64_t> sizes;
  for (const auto& c : configs) sizes.insert(c.n_params);
  if (sizes.size() < 3)
    throw AnalysisError(fmt::format("fit_power_law: need at least 3 distinct sizes, got {}", sizes.size()));

  std::vector<double> log_n, log_m;
  for (const auto& c : configs) {
    log_n.push_back(std::log(static_cast<double>(c.n_params)));
    log_m.push_back(std::log(c.mean_metric));
  }
  const auto pooled = ols(log_n, log_m);

  ScalingFit fit;
  fit.metric = metric;
  fit.alpha = -pooled.slope;
  fit.intercept = pooled.intercept;
  fit.r_squared = pooled.r_squared;
  fit.n_points = configs.size();

  const auto seeds = seed_set(configs.front());
  const bool aligned = std::all_of(configs.begin(), configs.end(),
                                   [&](const ConfigMean& c) { return seed_set(c) == seeds; });
  if (!aligned) {
    fit.warnings.push_back("seeds do not cover every config; per-seed exponents omitted");
    return fit;
  }
  if (seeds.size() < 2) {
    fit.warnings.push_back("fewer than 2 seeds; per-seed exponents omitted");
    return fit;
  }

  for (auto seed : seeds) {
    std::vector<double> y;
    for (const auto& c : configs) y.push_back(std::log(c.by_seed.at(seed)));
    const auto f = ols(log_n, y);
    fit.seeds.push_back(seed);
    fit.per_seed_alphas.push_back(-f.slope);
    fit.per_seed_r_squared.push_back(f.r_squared);
  }
  fit.alpha_mean = mean(fit.per_seed_alphas);
  fit.alpha_std = sample_std(fit.per_seed_alphas);
  const double n = static_cast<double>(fit.per_seed_alphas.size());
  const double half = student_t_critical(0.95, n - 1.0) * *fit.alpha_std / std::sqrt(n);
  fit.alpha_ci95 = Interval{*fit.alpha_mean - half, *fit.alpha_mean + half};
  return fit;
}

ExponentComparison compare_exponents(const ScalingFit& a, const ScalingFit& b) {
  const auto& xa = a.per_seed_alphas;
  const auto& xb = b.per_seed_alphas;
  if (xa.size() < 2 || xb.size() < 2)
    throw AnalysisError("compare_exponents: both fits need per-seed exponents for >= 2 seeds");

  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  const double ma = mean(xa), mb = mean(xb);
  const double va = std::pow(*sample_std(xa), 2), vb = std::pow(*sample_std(xb), 2);
  const double dof = na + nb - 2.0;
  const double pooled_var = ((na - 1.0) * va + (nb - 1.0) * vb) / dof;
  const double se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));

  ExponentComparison out;
  out.dof = static_cast<std::size_t>(dof);
  const double diff = ma - mb;
  if (se > 0.0) {
    out.t_statistic = diff / se;
    out.p_value = student_t_two_sided_p(out.t_statistic, dof);
  } else if (diff == 0.0) {
    out.t_statistic = 0.0;
    out.p_value = 1.0;
  } else {
    out.t_statistic = diff > 0 ? HUGE_VAL : -HUGE_VAL;
    out.p_value = 0.0;
  }
  return out;
}

std::vector<LocalExponent> local_exponents(const std::vector<ScalingPoint>& points) {
  const auto configs = config_means(points);
  if (configs.size() < 2) throw AnalysisError("local_exponents: need at least 2 configs");

  std::vector<LocalExponent> out;
  for (std::size_t i = 0; i + 1 < configs.size(); ++i) {
    const auto& lo = configs[i];
    const auto& hi = configs[i + 1];
    if (lo.n_params == hi.n_params)
      throw AnalysisError(fmt::format("local_exponents: configs '{}' and '{}' tie at n_params = {}",
                                      lo.config_id, hi.config_id, lo.n_params));
    const double dlog_n = std::log(static_cast<double>(hi.n_params)) -
                          std::log(static_cast<double>(lo.n_params));
    LocalExponent le;
    le.config_lo = lo.config_id;
    le.config_hi = hi.config_id;
    le.n_lo = lo.n_params;
    le.n_hi = hi.n_params;
    le.alpha_local = -(std::log(hi.mean_metric) - std::log(lo.mean_metric)) / dlog_n;
    if (seed_set(lo) == seed_set(hi)) {
      for (const auto& [seed, m_lo] : lo.by_seed)
        le.per_seed_values.push_back(-(std::log(hi.by_seed.at(seed)) - std::log(m_lo)) / dlog_n);
    }
    out.push_back(std::move(le));
  }
  return out;
}

SaturationLabel classify_saturation(double alpha_local, const SaturationThresholds& t) {
  if (alpha_local <= t.saturated) return SaturationLabel::saturated;
  if (alpha_local <= t.diminishing) return SaturationLabel::diminishing;
  return SaturationLabel::scaling;
}

std::vector<SaturationLabel> classify_saturation(const std::vector<LocalExponent>& locals,
                                                 const SaturationThresholds& t) {
  std::vector<SaturationLabel> out;
  out.reserve(locals.size());
  for (const auto& le : locals) out.push_back(classify_saturation(le.alpha_local, t));
  return out;
}

std::vector<ScalingPoint> scaling_points(const Corpus& corpus, std::string_view arch, Metric metric) {
  std::vector<ScalingPoint> out;
  for (const auto& g : corpus.groups) {
    if (g.arch != arch) continue;
    for (auto idx : g.record_indices) {
      const auto& r = corpus.record(idx);
      double value = 0.0;
      if (metric == Metric::error_rate) {
        value = error_mask(r, corpus.manifest).error_rate();
      } else {
        if (!r.final_train_loss)
          throw AnalysisError(fmt::format("record ({}, {}, seed {}) has no final_train_loss", r.arch,
                                          r.config_id, r.seed));
        value = *r.final_train_loss;
      }
      out.push_back({r.n_params, value, r.seed, r.config_id});
    }
  }
  if (out.empty()) throw AnalysisError(fmt::format("no records for architecture '{}'", arch));
  return out;
}

}  // namespace scalelens
