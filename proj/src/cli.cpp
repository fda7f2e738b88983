#include "scalelens/cli.hpp"

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "scalelens/matrix_io.hpp"
#include "scalelens/report.hpp"
#include "scalelens/synth.hpp"

namespace scalelens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string manifest;
  std::string records;
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct Output {
  const Globals& g;
  std::ostream& out;

  // Writes to out_dir/name when an output directory was given, else to stdout.
  void emit(const std::string& name, const std::string& text) const {
    if (g.out_dir.empty()) {
      out << text;
      return;
    }
    fs::create_directories(g.out_dir);
    write_text(fs::path(g.out_dir) / name, text);
  }
  bool json_format() const { return g.format == "json"; }
};

Corpus require_corpus(const Globals& g) {
  if (g.manifest.empty() || g.records.empty())
    throw ValidationError("--manifest and --records are required for this command");
  return load_corpus(g.manifest, g.records);
}

std::string dump(const json& j) { return rounded(j).dump(2) + "\n"; }

RankingMode ranking_from_string(const std::string& s) {
  return s == "pooled" ? RankingMode::pooled : RankingMode::per_seed;
}

std::string eigenvalues_csv(const EigenSpectrum& s) {
  std::string text = "k,eigenvalue\n";
  for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
    text += fmt::format("{},{}\n", k + 1, format_number(s.eigenvalues[k]));
  return text;
}

}  // namespace

int cli_dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"scalelens: scaling, overlap, fairness, calibration and spectral analyses of evaluation runs"};
  app.name("scalelens");
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--manifest", g.manifest, "dataset manifest JSON");
  app.add_option("--records", g.records, "run records JSONL file or directory of them");
  app.add_option("--out-dir", g.out_dir, "write output files here instead of stdout");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "PRNG seed");
  app.add_option("--threads", g.threads, "worker threads (0: SCALELENS_THREADS or 1)");

  auto* validate = app.add_subcommand("validate", "check a manifest and its records");

  auto* fit = app.add_subcommand("fit-scaling", "power-law fit per architecture");
  std::string metric = "error_rate";
  fit->add_option("--metric", metric, "error_rate or train_loss")
      ->check(CLI::IsMember({"error_rate", "train_loss"}));

  auto* local = app.add_subcommand("local-exponents", "exponents between consecutive sizes");
  SaturationThresholds thresholds;
  local->add_option("--saturated", thresholds.saturated, "upper bound of the saturated label");
  local->add_option("--diminishing", thresholds.diminishing, "upper bound of the diminishing label");

  auto* jac = app.add_subcommand("jaccard-matrix", "error-set overlap between all configs");
  std::size_t resamples = 10000;
  jac->add_option("--resamples", resamples, "bootstrap resamples");

  auto* fair = app.add_subcommand("fairness", "per-class accuracy inequality");
  std::string ranking = "per_seed";
  std::size_t null_trials = 10000;
  fair->add_option("--ranking", ranking, "per_seed or pooled")->check(CLI::IsMember({"per_seed", "pooled"}));
  fair->add_option("--null-trials", null_trials, "Monte-Carlo trials for the binomial null");

  auto* cal = app.add_subcommand("calibration", "expected calibration error and reliability bins");
  std::size_t n_bins = 15;
  cal->add_option("--bins", n_bins, "number of equal-width bins")->check(CLI::PositiveNumber);

  auto* spec = app.add_subcommand("spectral", "covariance eigenvalue decay of a data matrix");
  std::string npy, raw, png_dir, dtype = "f64";
  std::vector<std::string> cifar;
  std::size_t rows = 0, cols = 0, label_bytes = kCifar100LabelBytes, k_min = kDefaultKMin, k_max = kDefaultKMax;
  SpectrumOptions spec_opts;
  std::optional<double> spec_gamma, spec_alpha, capacity;
  auto* in_npy = spec->add_option("--matrix", npy, ".npy matrix, rows are samples");
  auto* in_raw = spec->add_option("--raw", raw, "headerless row-major matrix");
  auto* in_cifar = spec->add_option("--cifar-bin", cifar, "CIFAR binary batch file (repeatable)");
  auto* in_png = spec->add_option("--png-dir", png_dir, "directory of same-sized PNG images");
  in_npy->excludes(in_raw, in_cifar, in_png);
  in_raw->excludes(in_cifar, in_png);
  in_cifar->excludes(in_png);
  spec->add_option("--rows", rows, "rows of --raw");
  spec->add_option("--cols", cols, "columns of --raw");
  spec->add_option("--dtype", dtype, "element type of --raw")->check(CLI::IsMember({"f64", "f32", "u8"}));
  spec->add_option("--label-bytes", label_bytes, "label bytes per CIFAR record (1 for CIFAR-10)");
  spec->add_option("--k-min", k_min, "first fitted index");
  spec->add_option("--k-max", k_max, "last fitted index");
  spec->add_option("--direct-threshold", spec_opts.direct_threshold, "feature count above which SVD is used");
  spec->add_option("--gamma", spec_gamma, "learning efficiency for a predicted exponent");
  spec->add_option("--alpha", spec_alpha, "measured exponent for an implied efficiency");
  spec->add_option("--capacity", capacity, "effective capacity K for the residual loss");

  auto* pred = app.add_subcommand("predict-alpha", "scaling exponent from spectral decay");
  double beta = 0.0;
  std::optional<double> gamma, alpha;
  pred->add_option("--beta", beta, "eigenvalue decay exponent")->required();
  auto* pg = pred->add_option("--gamma", gamma, "learning efficiency");
  auto* pa = pred->add_option("--alpha", alpha, "measured exponent, prints the implied efficiency");
  pg->excludes(pa);

  auto* syn = app.add_subcommand("synth", "write a synthetic dataset with planted parameters");
  std::string spec_file, kind, params = "{}";
  auto* sf = syn->add_option("--spec", spec_file, "JSON file {kind, seed, params}");
  auto* sk = syn->add_option("--kind", kind, "generator kind");
  syn->add_option("--params", params, "generator parameters as inline JSON");
  sf->excludes(sk);

  auto* rep = app.add_subcommand("report", "run every analysis and write tables plus report.json");
  ReportOptions ropts;
  std::string rep_ranking = "per_seed", spectrum_npy;
  rep->add_option("--bins", ropts.n_bins, "calibration bins")->check(CLI::PositiveNumber);
  rep->add_option("--resamples", ropts.bootstrap_resamples, "bootstrap resamples");
  rep->add_option("--null-trials", ropts.null_trials, "binomial null trials");
  rep->add_option("--ranking", rep_ranking, "per_seed or pooled")->check(CLI::IsMember({"per_seed", "pooled"}));
  rep->add_option("--spectrum-npy", spectrum_npy, "data matrix whose spectral fit joins the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  const Output o{g, out};
  const unsigned threads = resolve_threads(g.threads);

  try {
    if (validate->parsed()) {
      const auto corpus = require_corpus(g);
      json j = {{"valid", true},
                {"dataset_id", corpus.manifest.dataset_id},
                {"n_records", corpus.records.size()},
                {"n_configs", corpus.groups.size()},
                {"architectures", corpus.architectures()},
                {"corpus_fingerprint", corpus_fingerprint(corpus)}};
      out << j.dump(2) << "\n";
    } else if (fit->parsed()) {
      const auto corpus = require_corpus(g);
      const Metric m = metric_from_string(metric);
      std::vector<ArchFits> fits;
      for (const auto& arch : corpus.architectures()) {
        ArchFits f;
        f.arch = arch;
        f.error_fit = fit_power_law(scaling_points(corpus, arch, m), m);
        fits.push_back(std::move(f));
      }
      if (o.json_format() || !g.out_dir.empty()) {
        auto j = fits_json(fits);
        for (auto& a : j["architectures"]) {
          a["fit"] = a["error_rate_fit"];
          a.erase("error_rate_fit");
          a.erase("train_loss_fit");
          a.erase("local_exponents");
        }
        o.emit("fits.json", dump(j));
      }
      if (!o.json_format() || !g.out_dir.empty()) o.emit("fits.csv", fits_csv(fits));
    } else if (local->parsed()) {
      const auto corpus = require_corpus(g);
      std::vector<ArchFits> fits;
      for (const auto& arch : corpus.architectures()) {
        ArchFits f;
        f.arch = arch;
        f.locals = local_exponents(scaling_points(corpus, arch, Metric::error_rate));
        f.labels = classify_saturation(f.locals, thresholds);
        fits.push_back(std::move(f));
      }
      if (o.json_format()) {
        json j = json::array();
        for (const auto& f : fits)
          for (std::size_t i = 0; i < f.locals.size(); ++i) {
            auto row = to_json(f.locals[i], f.labels[i]);
            row["arch"] = f.arch;
            j.push_back(row);
          }
        o.emit("local_exponents.json", dump(j));
      } else {
        o.emit("local_exponents.csv", local_exponents_csv(fits));
      }
    } else if (jac->parsed()) {
      const auto corpus = require_corpus(g);
      ReportOptions ro;
      ro.seed = g.seed;
      ro.threads = threads;
      ro.bootstrap_resamples = resamples;
      const auto m = jaccard_analysis(corpus, ro);
      if (!g.out_dir.empty()) {
        o.emit("jaccard_matrix.csv", jaccard_matrix_csv(m));
        o.emit("jaccard_pairs.json", dump(jaccard_json(m)));
      } else if (o.json_format()) {
        o.emit("", dump(jaccard_json(m)));
      } else {
        o.emit("", jaccard_matrix_csv(m));
      }
    } else if (fair->parsed()) {
      const auto corpus = require_corpus(g);
      ReportOptions ro;
      ro.seed = g.seed;
      ro.threads = threads;
      ro.null_trials = null_trials;
      ro.ranking = ranking_from_string(ranking);
      const auto rows_out = fairness_analysis(corpus, ro);
      json j = json::array();
      for (const auto& r : rows_out) j.push_back(to_json(r));
      if (!g.out_dir.empty()) {
        o.emit("fairness.csv", fairness_csv(rows_out));
        o.emit("fairness.json", dump(j));
      } else {
        o.emit("", o.json_format() ? dump(j) : fairness_csv(rows_out));
      }
    } else if (cal->parsed()) {
      const auto corpus = require_corpus(g);
      ReportOptions ro;
      ro.threads = threads;
      ro.n_bins = n_bins;
      const auto rows_out = calibration_analysis(corpus, ro);
      json j = json::array();
      for (const auto& r : rows_out) {
        json seeds = json::array();
        for (const auto& s : r.per_seed) seeds.push_back(to_json(s));
        j.push_back({{"arch", r.arch},
                     {"config_id", r.config_id},
                     {"ece_mean", r.ece_mean},
                     {"ece_std", r.ece_std ? json(*r.ece_std) : json(nullptr)},
                     {"per_seed", seeds}});
      }
      if (!g.out_dir.empty()) {
        o.emit("calibration.csv", calibration_csv(rows_out));
        o.emit("reliability.csv", reliability_csv(rows_out));
        o.emit("calibration.json", dump(j));
      } else {
        o.emit("", o.json_format() ? dump(j) : reliability_csv(rows_out));
      }
    } else if (spec->parsed()) {
      EigenSpectrum s;
      if (!cifar.empty()) {
        CovarianceAccumulator acc(kCifarPixels);
        std::vector<fs::path> files(cifar.begin(), cifar.end());
        stream_cifar_binary(files, label_bytes, 2048, [&](const Eigen::MatrixXd& b) { acc.add(b); });
        s = acc.spectrum();
      } else {
        Eigen::MatrixXd data;
        if (!npy.empty()) {
          data = load_npy(npy);
        } else if (!raw.empty()) {
          if (rows == 0 || cols == 0) throw ValidationError("--raw needs --rows and --cols");
          data = load_raw(raw, rows, cols, raw_dtype_from_string(dtype));
        } else if (!png_dir.empty()) {
          data = load_png_dir(png_dir);
        } else {
          throw ValidationError("spectral needs one of --matrix, --raw, --cifar-bin, --png-dir");
        }
        s = covariance_spectrum(data, spec_opts);
      }
      const auto f = fit_spectral_decay(s, k_min, k_max);
      json j = to_json(f);
      j["n_samples"] = s.n_samples;
      j["n_features"] = s.n_features;
      if (spec_gamma) {
        j["gamma"] = *spec_gamma;
        j["predicted_alpha"] = predict_alpha(f.beta, *spec_gamma);
      }
      if (spec_alpha) {
        j["alpha"] = *spec_alpha;
        j["implied_gamma"] = implied_gamma(*spec_alpha, f.beta);
      }
      if (capacity) {
        const auto analytic = residual_loss(f.beta, *capacity);
        const auto empirical = residual_loss(s, *capacity);
        j["capacity"] = *capacity;
        j["residual_loss"] = {{std::string(to_string(analytic.form)), analytic.value},
                              {std::string(to_string(empirical.form)), empirical.value}};
      }
      if (!g.out_dir.empty()) {
        o.emit("eigenvalues.csv", eigenvalues_csv(s));
        o.emit("spectral_fit.json", dump(j));
      } else {
        o.emit("", o.json_format() ? dump(j) : eigenvalues_csv(s));
      }
    } else if (pred->parsed()) {
      if (!gamma && !alpha) throw ValidationError("predict-alpha needs --gamma or --alpha");
      json j = {{"beta", beta}};
      double value;
      if (gamma) {
        value = predict_alpha(beta, *gamma);
        j["gamma"] = *gamma;
        j["alpha"] = value;
      } else {
        value = implied_gamma(*alpha, beta);
        j["alpha"] = *alpha;
        j["gamma"] = value;
      }
      out << (o.json_format() ? dump(j) : format_number(value) + "\n");
    } else if (syn->parsed()) {
      if (g.out_dir.empty()) throw ValidationError("synth needs --out-dir");
      SynthSpec s;
      if (!spec_file.empty()) {
        std::ifstream in(spec_file);
        if (!in) throw ValidationError(fmt::format("cannot open '{}'", spec_file));
        s = synth_spec_from_json(json::parse(in));
      } else {
        if (kind.empty()) throw ValidationError("synth needs --spec or --kind");
        s.kind = synth_kind_from_string(kind);
        s.params = json::parse(params);
        s.seed = g.seed;
      }
      for (const auto& p : write_synth(s, g.out_dir)) out << p.string() << "\n";
    } else if (rep->parsed()) {
      if (g.out_dir.empty()) throw ValidationError("report needs --out-dir");
      const auto corpus = require_corpus(g);
      ropts.seed = g.seed;
      ropts.threads = threads;
      ropts.ranking = ranking_from_string(rep_ranking);
      std::optional<EigenSpectrum> spectrum;
      if (!spectrum_npy.empty()) spectrum = covariance_spectrum(load_npy(spectrum_npy));
      run_report(corpus, ropts, g.out_dir, spectrum);
      out << (fs::path(g.out_dir) / "report.json").string() << "\n";
    }
  } catch (const ValidationError& e) {
    err << json{{"error", {{"kind", "validation"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const AnalysisError& e) {
    err << json{{"error", {{"kind", "analysis"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace scalelens
