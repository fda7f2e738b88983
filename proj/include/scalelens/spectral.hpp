#pragma once

// Spectral capacity pipeline: covariance eigenspectrum of a data matrix,
// power-law decay fit lambda_k ~ k^-beta, and the closed forms linking the
// decay exponent, the rank efficiency exponent and the scaling exponent.
//
// A model of effective rank K keeps the top K eigenmodes, so its residual
// loss is the spectral tail beyond K. With lambda_k ~ k^-beta the tail is
// K^(1-beta) / (beta - 1); if K grows as N^gamma the loss falls as
// N^-alpha with alpha = gamma (beta - 1).

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace scalelens {

struct EigenSpectrum {
  /// Descending, nonnegative.
  std::vector<double> eigenvalues;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  bool centered = true;
};

struct SpectrumOptions {
  /// Up to this many features the covariance is formed and diagonalized
  /// directly; above it the centered matrix goes through an SVD.
  std::size_t direct_threshold = 4096;
};

/// Streams row batches into a shifted sum and cross-product so a large
/// data matrix never has to be held in memory at once.
class CovarianceAccumulator {
public:
  explicit CovarianceAccumulator(std::size_t n_features);

  void add(const Eigen::Ref<const Eigen::MatrixXd>& rows);
  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_features() const { return static_cast<std::size_t>(sum_.size()); }

  /// Sample covariance (n - 1 divisor).
  Eigen::MatrixXd covariance() const;
  EigenSpectrum spectrum() const;

private:
  std::size_t n_samples_ = 0;
  bool have_shift_ = false;
  Eigen::RowVectorXd shift_;
  Eigen::RowVectorXd sum_;
  Eigen::MatrixXd cross_;  // lower triangle valid
};

/// Eigenvalues of the sample covariance of `data` (rows = samples).
/// Throws AnalysisError for < 2 samples or non-finite entries.
EigenSpectrum covariance_spectrum(const Eigen::MatrixXd& data, const SpectrumOptions& options = {});

/// Sorts descending, clamps round-off negatives to zero and rejects values
/// below -1e-10 * max.
std::vector<double> clean_eigenvalues(std::vector<double> values);

struct SpectralFit {
  double beta = 0.0;
  double beta_std = 0.0;  // OLS standard error of the slope
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t k_min = 0;  // 1-based, inclusive
  std::size_t k_max = 0;
  std::size_t n_points = 0;
};

inline constexpr std::size_t kDefaultKMin = 10;
inline constexpr std::size_t kDefaultKMax = 500;

SpectralFit fit_spectral_decay(const EigenSpectrum& spectrum, std::size_t k_min = kDefaultKMin,
                               std::size_t k_max = kDefaultKMax);

/// Rank efficiency from width counting: parameters grow with width squared
/// while representable rank grows with width, so K ~ N^(1/2).
inline constexpr double kNaiveGamma = 0.5;

/// alpha = gamma (beta - 1). Requires beta > 1 and gamma in (0, 1).
double predict_alpha(double beta, double gamma);

/// gamma = alpha / (beta - 1). Requires beta > 1 and alpha > 0.
double implied_gamma(double alpha_measured, double beta);

enum class ResidualForm { analytic, empirical };
std::string_view to_string(ResidualForm form);

struct ResidualLoss {
  double value = 0.0;
  ResidualForm form = ResidualForm::analytic;
};

/// K^(1-beta) / (beta - 1); K >= 1, beta > 1.
ResidualLoss residual_loss(double beta, double capacity_k);

/// Sum of eigenvalues with 1-based index k > K; 1 <= K <= spectrum length.
ResidualLoss residual_loss(const EigenSpectrum& spectrum, double capacity_k);

}  // namespace scalelens
