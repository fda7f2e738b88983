#include "scalelens/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "scalelens/stats.hpp"

namespace scalelens {

CovarianceAccumulator::CovarianceAccumulator(std::size_t n_features)
    : shift_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n_features))),
      sum_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n_features))),
      cross_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_features),
                                   static_cast<Eigen::Index>(n_features))) {
  if (n_features == 0) throw AnalysisError("covariance: need at least one feature");
}

void CovarianceAccumulator::add(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.cols() != sum_.size())
    throw AnalysisError(fmt::format("covariance: batch has {} columns, expected {}", rows.cols(), sum_.size()));
  if (rows.rows() == 0) return;
  if (!rows.allFinite()) throw AnalysisError("covariance: data contains non-finite entries");
  if (!have_shift_) {
    shift_ = rows.row(0);
    have_shift_ = true;
  }
  const Eigen::MatrixXd centered = rows.rowwise() - shift_;
  sum_ += centered.colwise().sum();
  cross_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  n_samples_ += static_cast<std::size_t>(rows.rows());
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (n_samples_ < 2) throw AnalysisError("covariance: need at least 2 samples");
  const double n = static_cast<double>(n_samples_);
  Eigen::MatrixXd cov = cross_.selfadjointView<Eigen::Lower>();
  cov.noalias() -= (sum_.transpose() * sum_) / n;
  cov /= (n - 1.0);
  return cov;
}

EigenSpectrum CovarianceAccumulator::spectrum() const {
  const Eigen::MatrixXd cov = covariance();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw AnalysisError("covariance: eigendecomposition failed");
  const auto& ev = solver.eigenvalues();
  std::vector<double> values(ev.data(), ev.data() + ev.size());
  values = clean_eigenvalues(std::move(values));
  values.resize(std::min(values.size(), n_samples_));
  return {std::move(values), n_samples_, n_features(), true};
}

std::vector<double> clean_eigenvalues(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  if (values.empty()) return values;
  const double floor = -1e-10 * std::max(std::fabs(values.front()), std::fabs(values.back()));
  for (auto& v : values) {
    if (v < floor) throw AnalysisError(fmt::format("covariance: eigenvalue {} below numerical floor", v));
    if (v < 0.0) v = 0.0;
  }
  return values;
}

EigenSpectrum covariance_spectrum(const Eigen::MatrixXd& data, const SpectrumOptions& options) {
  if (data.rows() < 2) throw AnalysisError("covariance_spectrum: need at least 2 samples");
  if (data.cols() < 1) throw AnalysisError("covariance_spectrum: need at least one feature");
  if (!data.allFinite()) throw AnalysisError("covariance_spectrum: data contains non-finite entries");
  const auto n = static_cast<std::size_t>(data.rows());
  const auto p = static_cast<std::size_t>(data.cols());

  if (p <= options.direct_threshold) {
    CovarianceAccumulator acc(p);
    acc.add(data);
    return acc.spectrum();
  }

  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  std::vector<double> values(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    values[static_cast<std::size_t>(i)] = sv[i] * sv[i] / static_cast<double>(n - 1);
  return {clean_eigenvalues(std::move(values)), n, p, true};
}

SpectralFit fit_spectral_decay(const EigenSpectrum& spectrum, std::size_t k_min, std::size_t k_max) {
  if (k_min < 1) throw AnalysisError("fit_spectral_decay: k_min must be >= 1");
  if (k_max > spectrum.eigenvalues.size())
    throw AnalysisError(fmt::format("fit_spectral_decay: k_max = {} exceeds spectrum length {}", k_max,
                                    spectrum.eigenvalues.size()));
  if (k_max < k_min || k_max - k_min + 1 < 3)
    throw AnalysisError("fit_spectral_decay: fit range needs at least 3 eigenvalues");

  std::vector<double> log_k, log_l;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const double lambda = spectrum.eigenvalues[k - 1];
    if (!(lambda > 0.0))
      throw AnalysisError(fmt::format("fit_spectral_decay: eigenvalue {} is zero in the fit range", k));
    log_k.push_back(std::log(static_cast<double>(k)));
    log_l.push_back(std::log(lambda));
  }
  const auto f = ols(log_k, log_l);
  return {-f.slope, f.slope_stderr, f.intercept, f.r_squared, k_min, k_max, f.n};
}

double predict_alpha(double beta, double gamma) {
  if (!(beta > 1.0))
    throw AnalysisError("predict_alpha: beta must exceed 1 (the spectral tail integral diverges otherwise)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw AnalysisError("predict_alpha: gamma must lie in (0, 1)");
  return gamma * (beta - 1.0);
}

double implied_gamma(double alpha_measured, double beta) {
  if (!(beta > 1.0))
    throw AnalysisError("implied_gamma: beta must exceed 1 (the spectral tail integral diverges otherwise)");
  if (!(alpha_measured > 0.0)) throw AnalysisError("implied_gamma: alpha must be positive");
  return alpha_measured / (beta - 1.0);
}

std::string_view to_string(ResidualForm form) {
  return form == ResidualForm::analytic ? "analytic" : "empirical";
}

ResidualLoss residual_loss(double beta, double capacity_k) {
  if (!(beta > 1.0)) throw AnalysisError("residual_loss: analytic form requires beta > 1");
  if (!(capacity_k >= 1.0)) throw AnalysisError("residual_loss: K must be >= 1");
  return {std::pow(capacity_k, 1.0 - beta) / (beta - 1.0), ResidualForm::analytic};
}

ResidualLoss residual_loss(const EigenSpectrum& spectrum, double capacity_k) {
  if (!(capacity_k >= 1.0)) throw AnalysisError("residual_loss: K must be >= 1");
  if (capacity_k > static_cast<double>(spectrum.eigenvalues.size()))
    throw AnalysisError(fmt::format("residual_loss: K = {} beyond spectrum length {}", capacity_k,
                                    spectrum.eigenvalues.size()));
  const auto first = static_cast<std::size_t>(std::floor(capacity_k));
  double tail = 0.0;
  for (std::size_t i = first; i < spectrum.eigenvalues.size(); ++i) tail += spectrum.eigenvalues[i];
  return {tail, ResidualForm::empirical};
}

}  // namespace scalelens
