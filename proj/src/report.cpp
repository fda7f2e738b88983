#include "scalelens/report.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace scalelens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kPairSeedTag = 1'000'000;
constexpr std::uint64_t kGiniDiffSeedTag = 2'000'000;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  auto rng = make_stream(seed, tag);
  return rng();
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string label_of(const ConfigGroup& g) { return g.arch + "/" + g.config_id; }

}  // namespace

double round9(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  return std::strtod(fmt::format("{:.9g}", x).c_str(), nullptr);
}

json rounded(const json& j) {
  if (j.is_number_float()) return round9(j.get<double>());
  if (j.is_object()) {
    json out = json::object();
    for (const auto& item : j.items()) out[item.key()] = rounded(item.value());
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(rounded(v));
    return out;
  }
  return j;
}

std::string corpus_fingerprint(const Corpus& corpus) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  const auto feed = [&](const std::string& s) {
    EVP_DigestUpdate(ctx, s.data(), s.size());
    EVP_DigestUpdate(ctx, "\n", 1);
  };
  feed(manifest_to_json(corpus.manifest).dump());
  for (const auto& g : corpus.groups)
    for (auto idx : g.record_indices) feed(record_to_json(corpus.record(idx)).dump());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return "sha256:" + hex;
}

json conventions_json(const ReportOptions& o) {
  return {
      {"logarithm", "natural"},
      {"pooled_fit", "OLS of ln(metric) on ln(n_params) over seed-mean points"},
      {"alpha_ci", "alpha_mean +/- t(0.975, n_seeds-1) * alpha_std / sqrt(n_seeds)"},
      {"exponent_test", "pooled-variance two-sample Student t, two-sided"},
      {"saturation_thresholds", {{"saturated", o.saturation.saturated}, {"diminishing", o.saturation.diminishing}}},
      {"saturation_tie_rule", "a value equal to a threshold takes the lower label"},
      {"ece_bins", o.n_bins},
      {"ece_bin_rule", kBinRule},
      {"bootstrap", "percentile (2.5, 97.5), type-7 quantiles of resampled means"},
      {"bootstrap_resamples", o.bootstrap_resamples},
      {"bootstrap_caveat", "seed pairs are resampled i.i.d.; pairs sharing a seed are correlated"},
      {"cross_config_pairs", "full Cartesian product of seeds, same-index pairs included"},
      {"cross_seed_pairs", "unordered distinct seed pairs"},
      {"null_models", "seed-mean error rates"},
      {"significance", "CI excludes null"},
      {"gini", "sum_ij |x_i - x_j| / (2 n^2 mean)"},
      {"null_gini_trials", o.null_trials},
      {"hardest_class_ranking", o.ranking == RankingMode::per_seed ? "per_seed" : "pooled"},
      {"hardest_class_tie_rule", "class index ascending"},
      {"bottom_top_k", o.ks},
      {"rng", kRngAlgorithm},
      {"seed", o.seed},
  };
}

json to_json(const ScalingFit& f) {
  json j = {{"metric", std::string(to_string(f.metric))},
            {"alpha", f.alpha},
            {"intercept", f.intercept},
            {"r_squared", f.r_squared},
            {"n_points", f.n_points},
            {"seeds", f.seeds},
            {"per_seed_alphas", f.per_seed_alphas},
            {"per_seed_r_squared", f.per_seed_r_squared},
            {"alpha_mean", opt(f.alpha_mean)},
            {"alpha_std", opt(f.alpha_std)},
            {"warnings", f.warnings}};
  j["alpha_ci95"] = f.alpha_ci95 ? json::array({f.alpha_ci95->lo, f.alpha_ci95->hi}) : json(nullptr);
  return j;
}

json to_json(const ExponentComparison& c) {
  return {{"t_statistic", std::isfinite(c.t_statistic) ? json(c.t_statistic) : json(nullptr)},
          {"p_value", c.p_value},
          {"dof", c.dof}};
}

json to_json(const LocalExponent& le, SaturationLabel label) {
  return {{"config_lo", le.config_lo},     {"config_hi", le.config_hi},
          {"n_lo", le.n_lo},               {"n_hi", le.n_hi},
          {"alpha_local", le.alpha_local}, {"per_seed_values", le.per_seed_values},
          {"label", std::string(to_string(label))}};
}

json to_json(const OverlapSummary& s) {
  json pairs = json::array();
  for (const auto& [a, b] : s.seed_pairs) pairs.push_back({a, b});
  json j = {{"config_a", s.config_a},
            {"config_b", s.config_b},
            {"pair_values", s.pair_values},
            {"seed_pairs", pairs},
            {"mean", s.mean},
            {"std", opt(s.std)},
            {"n_pairs", s.n_pairs},
            {"error_rate_a", s.error_rate_a},
            {"error_rate_b", s.error_rate_b},
            {"indep_null", opt(s.indep_null)},
            {"containment_null", opt(s.containment_null)}};
  if (s.bootstrap_ci95) {
    const auto& ci = *s.bootstrap_ci95;
    j["bootstrap_ci95"] = {ci.lo, ci.hi};
    if (s.indep_null) j["ci_excludes_indep_null"] = *s.indep_null < ci.lo || *s.indep_null > ci.hi;
    if (s.containment_null)
      j["ci_excludes_containment_null"] = *s.containment_null < ci.lo || *s.containment_null > ci.hi;
  } else {
    j["bootstrap_ci95"] = nullptr;
  }
  return j;
}

json to_json(const FairnessSummary& s) {
  json bottom = json::object(), top = json::object();
  for (const auto& [k, v] : s.bottom_k) bottom[std::to_string(k)] = v;
  for (const auto& [k, v] : s.top_k) top[std::to_string(k)] = v;
  return {{"arch", s.arch},
          {"config_id", s.config_id},
          {"n_params", s.n_params},
          {"seeds", s.seeds},
          {"per_seed_ginis", s.per_seed_ginis},
          {"gini_mean", s.gini_mean},
          {"gini_std", opt(s.gini_std)},
          {"mean_accuracy", s.mean_accuracy},
          {"null_gini", opt(s.null_gini)},
          {"null_gini_std", opt(s.null_gini_std)},
          {"bottom_k", bottom},
          {"top_k", top}};
}

json to_json(const CalibrationSummary& s) {
  json bins = json::array();
  for (const auto& b : s.bin_stats)
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_confidence", b.mean_confidence},
                    {"accuracy", b.accuracy}});
  return {{"config_id", s.config_id},
          {"ece", s.ece},
          {"n_bins", s.n_bins},
          {"bin_stats", bins},
          {"mean_conf_correct", opt(s.mean_conf_correct)},
          {"mean_conf_incorrect", opt(s.mean_conf_incorrect)},
          {"global_conf", s.global_conf},
          {"global_acc", s.global_acc},
          {"global_gap", s.global_gap}};
}

json to_json(const SpectralFit& f) {
  return {{"beta", f.beta},           {"beta_std", f.beta_std}, {"intercept", f.intercept},
          {"r_squared", f.r_squared}, {"k_min", f.k_min},       {"k_max", f.k_max},
          {"n_points", f.n_points}};
}

// Analyses --------------------------------------------------------------------------

std::vector<ConfigRow> config_table(const Corpus& corpus, const ReportOptions& options) {
  std::vector<ConfigRow> rows(corpus.groups.size());
  parallel_for(rows.size(), options.threads, [&](std::size_t gi) {
    const auto& g = corpus.groups[gi];
    ConfigRow row;
    row.arch = g.arch;
    row.config_id = g.config_id;
    row.n_params = g.n_params;
    row.macs = corpus.record(g.record_indices.front()).macs;
    row.n_seeds = g.record_indices.size();
    std::vector<double> accs, errs, eces;
    for (auto idx : g.record_indices) {
      const auto& r = corpus.record(idx);
      const double err = error_mask(r, corpus.manifest).error_rate();
      errs.push_back(err);
      accs.push_back(100.0 * (1.0 - err));
      eces.push_back(ece(r, corpus.manifest, options.n_bins).ece);
    }
    row.acc_mean = mean(accs);
    row.acc_std = sample_std(accs);
    row.err_mean = mean(errs);
    row.ece_mean = mean(eces);
    row.ece_std = sample_std(eces);
    rows[gi] = std::move(row);
  });
  return rows;
}

std::vector<ArchFits> scaling_analysis(const Corpus& corpus, const ReportOptions& options) {
  const auto archs = corpus.architectures();
  std::vector<ArchFits> out(archs.size());
  parallel_for(archs.size(), options.threads, [&](std::size_t ai) {
    ArchFits f;
    f.arch = archs[ai];
    const auto points = scaling_points(corpus, f.arch, Metric::error_rate);
    f.error_fit = fit_power_law(points, Metric::error_rate);
    bool have_loss = true;
    for (const auto& g : corpus.groups)
      if (g.arch == f.arch)
        for (auto idx : g.record_indices) have_loss = have_loss && corpus.record(idx).final_train_loss.has_value();
    if (have_loss) f.train_loss_fit = fit_power_law(scaling_points(corpus, f.arch, Metric::train_loss), Metric::train_loss);
    f.locals = local_exponents(points);
    f.labels = classify_saturation(f.locals, options.saturation);
    out[ai] = std::move(f);
  });
  return out;
}

JaccardMatrix jaccard_analysis(const Corpus& corpus, const ReportOptions& options) {
  const std::size_t n = corpus.groups.size();
  std::vector<std::vector<SeededMask>> masks(n);
  parallel_for(n, options.threads, [&](std::size_t i) { masks[i] = group_masks(corpus, corpus.groups[i]); });

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) jobs.emplace_back(i, j);
  for (std::size_t i = 0; i < n; ++i) jobs.emplace_back(i, i);

  JaccardMatrix m;
  m.mean.assign(n, std::vector<double>(n, 1.0));
  m.pairs.resize(jobs.size());
  for (const auto& g : corpus.groups) m.configs.push_back(label_of(g));

  std::vector<char> present(jobs.size(), 1);
  parallel_for(jobs.size(), options.threads, [&](std::size_t k) {
    const auto [i, j] = jobs[k];
    const BootstrapOptions boot{options.bootstrap_resamples, derive_seed(options.seed, kPairSeedTag + k), 1};
    OverlapSummary s;
    if (i != j) {
      s = cross_config_overlap(masks[i], masks[j], boot);
    } else if (masks[i].size() >= 2) {
      s = cross_seed_baseline(masks[i], boot);
    } else {
      present[k] = 0;
      return;
    }
    s.config_a = m.configs[i];
    s.config_b = m.configs[j];
    m.pairs[k] = std::move(s);
  });
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!present[k]) continue;
    const auto [i, j] = jobs[k];
    m.mean[i][j] = m.mean[j][i] = m.pairs[k].mean;
  }
  std::vector<OverlapSummary> kept;
  for (std::size_t k = 0; k < jobs.size(); ++k)
    if (present[k]) kept.push_back(std::move(m.pairs[k]));
  m.pairs = std::move(kept);
  return m;
}

std::vector<CalibrationRow> calibration_analysis(const Corpus& corpus, const ReportOptions& options) {
  std::vector<CalibrationRow> rows(corpus.groups.size());
  parallel_for(rows.size(), options.threads, [&](std::size_t gi) {
    const auto& g = corpus.groups[gi];
    CalibrationRow row;
    row.arch = g.arch;
    row.config_id = g.config_id;
    row.n_params = g.n_params;
    std::vector<double> eces, confs, accs, gaps, cc, ci;
    std::vector<std::size_t> counts(options.n_bins, 0);
    std::vector<double> conf_sum(options.n_bins, 0.0), hit_sum(options.n_bins, 0.0);
    for (auto idx : g.record_indices) {
      auto s = ece(corpus.record(idx), corpus.manifest, options.n_bins);
      eces.push_back(s.ece);
      confs.push_back(s.global_conf);
      accs.push_back(s.global_acc);
      gaps.push_back(s.global_gap);
      if (s.mean_conf_correct) cc.push_back(*s.mean_conf_correct);
      if (s.mean_conf_incorrect) ci.push_back(*s.mean_conf_incorrect);
      for (std::size_t b = 0; b < options.n_bins; ++b) {
        const auto& bs = s.bin_stats[b];
        counts[b] += bs.count;
        conf_sum[b] += bs.mean_confidence * static_cast<double>(bs.count);
        hit_sum[b] += bs.accuracy * static_cast<double>(bs.count);
      }
      row.per_seed.push_back(std::move(s));
    }
    row.ece_mean = mean(eces);
    row.ece_std = sample_std(eces);
    row.global_conf = mean(confs);
    row.global_acc = mean(accs);
    row.global_gap = mean(gaps);
    if (!cc.empty()) row.mean_conf_correct = mean(cc);
    if (!ci.empty()) row.mean_conf_incorrect = mean(ci);
    for (std::size_t b = 0; b < options.n_bins; ++b) {
      const auto& proto = row.per_seed.front().bin_stats[b];
      BinStat pooled{proto.lo, proto.hi, counts[b], 0.0, 0.0};
      if (counts[b] > 0) {
        pooled.mean_confidence = conf_sum[b] / static_cast<double>(counts[b]);
        pooled.accuracy = hit_sum[b] / static_cast<double>(counts[b]);
      }
      row.pooled_bins.push_back(pooled);
    }
    rows[gi] = std::move(row);
  });
  return rows;
}

std::vector<FairnessSummary> fairness_analysis(const Corpus& corpus, const ReportOptions& options) {
  std::vector<FairnessSummary> rows(corpus.groups.size());
  FairnessOptions fo;
  fo.ks = options.ks;
  fo.ranking = options.ranking;
  fo.null_trials = options.null_trials;
  fo.seed = options.seed;
  fo.threads = 1;
  parallel_for(rows.size(), options.threads,
               [&](std::size_t gi) { rows[gi] = summarize_fairness(corpus, corpus.groups[gi], fo); });
  return rows;
}

// CSV --------------------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  return fmt::format("{:.9g}", x);
}

namespace {

std::string num(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string scaling_csv(const std::vector<ConfigRow>& rows) {
  std::string out = "arch,config,n_params,macs,n_seeds,acc_mean,acc_std,err_mean,ece_mean,ece_std\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.arch, r.config_id, r.n_params,
                       r.macs ? std::to_string(*r.macs) : "", r.n_seeds, format_number(r.acc_mean), num(r.acc_std),
                       format_number(r.err_mean), format_number(r.ece_mean), num(r.ece_std));
  return out;
}

std::string fits_csv(const std::vector<ArchFits>& fits) {
  std::string out = "arch,metric,alpha,intercept,r_squared,n_points,alpha_mean,alpha_std,alpha_ci_lo,alpha_ci_hi\n";
  const auto row = [&](const std::string& arch, const ScalingFit& f) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", arch, to_string(f.metric), format_number(f.alpha),
                       format_number(f.intercept), format_number(f.r_squared), f.n_points, num(f.alpha_mean),
                       num(f.alpha_std), f.alpha_ci95 ? format_number(f.alpha_ci95->lo) : "",
                       f.alpha_ci95 ? format_number(f.alpha_ci95->hi) : "");
  };
  for (const auto& f : fits) {
    row(f.arch, f.error_fit);
    if (f.train_loss_fit) row(f.arch, *f.train_loss_fit);
  }
  return out;
}

std::string local_exponents_csv(const std::vector<ArchFits>& fits) {
  std::string out = "arch,config_lo,config_hi,n_lo,n_hi,alpha_local,label\n";
  for (const auto& f : fits)
    for (std::size_t i = 0; i < f.locals.size(); ++i) {
      const auto& le = f.locals[i];
      out += fmt::format("{},{},{},{},{},{},{}\n", f.arch, le.config_lo, le.config_hi, le.n_lo, le.n_hi,
                         format_number(le.alpha_local), to_string(f.labels[i]));
    }
  return out;
}

std::string jaccard_matrix_csv(const JaccardMatrix& m) {
  std::string out = "config";
  for (const auto& c : m.configs) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < m.configs.size(); ++i) {
    out += m.configs[i];
    for (double v : m.mean[i]) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

std::string fairness_csv(const std::vector<FairnessSummary>& rows) {
  std::string out = "arch,config,n_params,gini_mean,gini_std,null_gini";
  std::vector<std::size_t> ks;
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().bottom_k) ks.push_back(k);
  for (auto k : ks) out += fmt::format(",bottom_{}", k);
  for (auto k : ks) out += fmt::format(",top_{}", k);
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}", r.arch, r.config_id, r.n_params, format_number(r.gini_mean),
                       num(r.gini_std), num(r.null_gini));
    for (auto k : ks) out += "," + format_number(r.bottom_k.at(k));
    for (auto k : ks) out += "," + format_number(r.top_k.at(k));
    out += "\n";
  }
  return out;
}

std::string calibration_csv(const std::vector<CalibrationRow>& rows) {
  std::string out =
      "arch,config,n_params,ece_mean,ece_std,global_conf,global_acc,global_gap,mean_conf_correct,"
      "mean_conf_incorrect\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.arch, r.config_id, r.n_params, format_number(r.ece_mean),
                       num(r.ece_std), format_number(r.global_conf), format_number(r.global_acc),
                       format_number(r.global_gap), num(r.mean_conf_correct), num(r.mean_conf_incorrect));
  return out;
}

std::string reliability_csv(const std::vector<CalibrationRow>& rows) {
  std::string out = "arch,config,bin,lo,hi,count,conf,acc\n";
  for (const auto& r : rows)
    for (std::size_t b = 0; b < r.pooled_bins.size(); ++b) {
      const auto& s = r.pooled_bins[b];
      out += fmt::format("{},{},{},{},{},{},{},{}\n", r.arch, r.config_id, b, format_number(s.lo), format_number(s.hi),
                         s.count, format_number(s.mean_confidence), format_number(s.accuracy));
    }
  return out;
}

json fits_json(const std::vector<ArchFits>& fits) {
  json archs = json::array();
  for (const auto& f : fits) {
    json locals = json::array();
    for (std::size_t i = 0; i < f.locals.size(); ++i) locals.push_back(to_json(f.locals[i], f.labels[i]));
    archs.push_back({{"arch", f.arch},
                     {"error_rate_fit", to_json(f.error_fit)},
                     {"train_loss_fit", f.train_loss_fit ? to_json(*f.train_loss_fit) : json(nullptr)},
                     {"local_exponents", locals}});
  }
  json comparisons = json::array();
  for (std::size_t i = 0; i < fits.size(); ++i)
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      if (fits[i].error_fit.per_seed_alphas.size() < 2 || fits[j].error_fit.per_seed_alphas.size() < 2) continue;
      auto c = to_json(compare_exponents(fits[i].error_fit, fits[j].error_fit));
      c["arch_a"] = fits[i].arch;
      c["arch_b"] = fits[j].arch;
      comparisons.push_back(c);
    }
  return {{"architectures", archs}, {"exponent_comparisons", comparisons}};
}

json jaccard_json(const JaccardMatrix& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs) pairs.push_back(to_json(p));
  return {{"configs", m.configs}, {"matrix", m.mean}, {"pairs", pairs}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

json run_report(const Corpus& corpus, const ReportOptions& options, const fs::path& out_dir,
                const std::optional<EigenSpectrum>& spectrum) {
  const auto table = config_table(corpus, options);
  const auto fits = scaling_analysis(corpus, options);
  const auto jac = jaccard_analysis(corpus, options);
  const auto fair = fairness_analysis(corpus, options);
  const auto cal = calibration_analysis(corpus, options);

  json table_json = json::array();
  for (const auto& r : table)
    table_json.push_back({{"arch", r.arch},
                          {"config_id", r.config_id},
                          {"n_params", r.n_params},
                          {"macs", r.macs ? json(*r.macs) : json(nullptr)},
                          {"n_seeds", r.n_seeds},
                          {"acc_mean", r.acc_mean},
                          {"acc_std", opt(r.acc_std)},
                          {"err_mean", r.err_mean},
                          {"ece_mean", r.ece_mean},
                          {"ece_std", opt(r.ece_std)}});

  json fair_json = {{"configs", json::array()}, {"gini_differences", json::array()}};
  for (const auto& f : fair) fair_json["configs"].push_back(to_json(f));
  // Smallest vs largest config of each architecture.
  const auto archs = corpus.architectures();
  for (std::size_t ai = 0; ai < archs.size(); ++ai) {
    const FairnessSummary* lo = nullptr;
    const FairnessSummary* hi = nullptr;
    for (const auto& f : fair) {
      if (f.arch != archs[ai]) continue;
      if (!lo) lo = &f;
      hi = &f;
    }
    if (!lo || lo == hi || lo->per_seed_ginis.size() < 2 || hi->per_seed_ginis.size() < 2) continue;
    const auto ci = gini_difference_ci(lo->per_seed_ginis, hi->per_seed_ginis, options.bootstrap_resamples,
                                       derive_seed(options.seed, kGiniDiffSeedTag + ai));
    fair_json["gini_differences"].push_back({{"arch", archs[ai]},
                                             {"config_a", lo->config_id},
                                             {"config_b", hi->config_id},
                                             {"difference", lo->gini_mean - hi->gini_mean},
                                             {"bootstrap_ci95", {ci.lo, ci.hi}}});
  }

  json cal_json = json::array();
  for (const auto& r : cal) {
    json seeds = json::array();
    for (const auto& s : r.per_seed) seeds.push_back(to_json(s));
    cal_json.push_back({{"arch", r.arch},
                        {"config_id", r.config_id},
                        {"n_params", r.n_params},
                        {"ece_mean", r.ece_mean},
                        {"ece_std", opt(r.ece_std)},
                        {"global_conf", r.global_conf},
                        {"global_acc", r.global_acc},
                        {"global_gap", r.global_gap},
                        {"mean_conf_correct", opt(r.mean_conf_correct)},
                        {"mean_conf_incorrect", opt(r.mean_conf_incorrect)},
                        {"per_seed", seeds}});
  }

  json report = {
      {"tool_version", kToolVersion},
      {"corpus_fingerprint", corpus_fingerprint(corpus)},
      {"conventions", conventions_json(options)},
      {"corpus",
       {{"dataset_id", corpus.manifest.dataset_id},
        {"n_test", corpus.manifest.n_test},
        {"n_classes", corpus.manifest.n_classes},
        {"n_records", corpus.records.size()},
        {"n_configs", corpus.groups.size()},
        {"balanced", corpus.manifest.is_balanced()}}},
      {"table", table_json},
      {"scaling", fits_json(fits)},
      {"overlap", jaccard_json(jac)},
      {"fairness", fair_json},
      {"calibration", cal_json},
  };
  if (spectrum) {
    const auto fit = fit_spectral_decay(*spectrum);
    report["spectral"] = to_json(fit);
  }
  report = rounded(report);

  fs::create_directories(out_dir);
  write_text(out_dir / "scaling.csv", scaling_csv(table));
  write_text(out_dir / "local_exponents.csv", local_exponents_csv(fits));
  write_text(out_dir / "jaccard_matrix.csv", jaccard_matrix_csv(jac));
  write_text(out_dir / "fairness.csv", fairness_csv(fair));
  write_text(out_dir / "calibration.csv", calibration_csv(cal));
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace scalelens
