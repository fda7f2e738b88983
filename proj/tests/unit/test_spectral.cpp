#include <cmath>
#include <random>

#include "doctest.h"
#include "scalelens/record.hpp"
#include "scalelens/spectral.hpp"
#include "scalelens/synth.hpp"

using namespace scalelens;

namespace {

EigenSpectrum exact_spectrum(double beta, std::size_t n) {
  EigenSpectrum s;
  for (std::size_t k = 1; k <= n; ++k) s.eigenvalues.push_back(std::pow(static_cast<double>(k), -beta));
  s.n_features = n;
  s.n_samples = 10 * n;
  return s;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("identical rows give a zero spectrum") {
  Eigen::MatrixXd data(20, 5);
  for (int r = 0; r < 20; ++r) data.row(r) << 1, 2, 3, 4, 5;
  const auto s = covariance_spectrum(data);
  REQUIRE(s.eigenvalues.size() == 5);
  for (double v : s.eigenvalues) CHECK(std::fabs(v) < 1e-12);
}

TEST_CASE("known diagonal covariance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 100000;
  Eigen::MatrixXd data(n, 2);
  for (int r = 0; r < n; ++r) data.row(r) << 2.0 * z(rng) + 7.0, z(rng) - 3.0;
  const auto s = covariance_spectrum(data);
  // Sample variance of a Gaussian has sd lambda sqrt(2 / (n - 1)).
  CHECK(std::fabs(s.eigenvalues[0] - 4.0) < 3 * 4.0 * std::sqrt(2.0 / (n - 1)));
  CHECK(std::fabs(s.eigenvalues[1] - 1.0) < 3 * 1.0 * std::sqrt(2.0 / (n - 1)));
  CHECK(s.n_samples == static_cast<std::size_t>(n));
  CHECK(s.centered);
}

TEST_CASE("direct and SVD paths agree") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd data(300, 40);
  for (int r = 0; r < data.rows(); ++r)
    for (int c = 0; c < data.cols(); ++c) data(r, c) = z(rng) / (1.0 + c) + 5.0;
  const auto direct = covariance_spectrum(data, {4096});
  const auto svd = covariance_spectrum(data, {10});
  REQUIRE(direct.eigenvalues.size() == svd.eigenvalues.size());
  for (std::size_t k = 0; k < direct.eigenvalues.size(); ++k)
    CHECK(direct.eigenvalues[k] == doctest::Approx(svd.eigenvalues[k]).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("streaming accumulator matches the batch spectrum") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd data(500, 12);
  for (int r = 0; r < data.rows(); ++r)
    for (int c = 0; c < data.cols(); ++c) data(r, c) = 100.0 + z(rng) * (c + 1);
  CovarianceAccumulator acc(12);
  for (int start = 0; start < 500; start += 77) acc.add(data.middleRows(start, std::min(77, 500 - start)));
  const auto streamed = acc.spectrum();
  const auto batch = covariance_spectrum(data);
  for (std::size_t k = 0; k < 12; ++k) CHECK(streamed.eigenvalues[k] == doctest::Approx(batch.eigenvalues[k]).epsilon(1e-10));
  CHECK(acc.n_samples() == 500);
  CHECK_THROWS_AS(acc.add(Eigen::MatrixXd::Zero(3, 4)), AnalysisError);
}

TEST_CASE("clean eigenvalues") {
  const auto v = clean_eigenvalues({0.5, -1e-14, 2.0});
  CHECK(v == std::vector<double>{2.0, 0.5, 0.0});
  CHECK_THROWS_AS(clean_eigenvalues({1.0, -0.1}), AnalysisError);
}

TEST_CASE("exact power law is recovered") {
  const auto fit = fit_spectral_decay(exact_spectrum(1.45, 600));
  CHECK(std::fabs(fit.beta - 1.45) < 1e-10);
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.k_min == 10);
  CHECK(fit.k_max == 500);
  CHECK(fit.n_points == 491);
  CHECK(fit.beta_std < 1e-10);
}

TEST_CASE("planted Gaussian spectrum") {
  const auto data = gen_planted_spectrum(1.2, 50, 20000, 11);
  const auto fit = fit_spectral_decay(covariance_spectrum(data), 3, 40);
  CHECK(std::fabs(fit.beta - 1.2) < 0.03);
}

TEST_CASE("fit range errors") {
  const auto s = exact_spectrum(2.0, 50);
  CHECK_THROWS_AS(fit_spectral_decay(s, 0, 10), AnalysisError);
  CHECK_THROWS_AS(fit_spectral_decay(s, 10, 500), AnalysisError);
  CHECK_THROWS_AS(fit_spectral_decay(s, 10, 11), AnalysisError);
  auto z = s;
  z.eigenvalues[20] = 0.0;
  CHECK_THROWS_AS(fit_spectral_decay(z, 10, 30), AnalysisError);
}

TEST_CASE("closed forms") {
  CHECK(std::fabs(predict_alpha(1.45, kNaiveGamma) - 0.225) < 1e-15);
  CHECK(predict_alpha(1.1, 0.5) == doctest::Approx(0.05));
  CHECK(implied_gamma(0.156, 1.45) == doctest::Approx(0.346666667).epsilon(1e-8));
  CHECK(implied_gamma(0.106, 1.45) == doctest::Approx(0.235555556).epsilon(1e-8));
  CHECK(predict_alpha(1.45, implied_gamma(0.156, 1.45)) == doctest::Approx(0.156));
  CHECK_THROWS_AS(predict_alpha(1.0, 0.5), AnalysisError);
  CHECK_THROWS_AS(predict_alpha(0.8, 0.5), AnalysisError);
  CHECK_THROWS_AS(predict_alpha(1.45, 1.0), AnalysisError);
  CHECK_THROWS_AS(predict_alpha(1.45, 0.0), AnalysisError);
  CHECK_THROWS_AS(implied_gamma(0.1, 1.0), AnalysisError);
  CHECK_THROWS_AS(implied_gamma(0.0, 1.5), AnalysisError);
}

TEST_CASE("residual loss") {
  const auto r = residual_loss(2.0, 10.0);
  CHECK(r.value == doctest::Approx(0.1));
  CHECK(r.form == ResidualForm::analytic);
  CHECK(to_string(ResidualForm::empirical) == "empirical");
  // Doubling K multiplies the tail by 2^(1 - beta).
  CHECK(residual_loss(1.45, 40.0).value / residual_loss(1.45, 20.0).value == doctest::Approx(std::pow(2.0, -0.45)));
  // With K = N^(1/2), doubling N multiplies it by 2^-0.225.
  const double n = 1e6;
  CHECK(residual_loss(1.45, std::sqrt(2 * n)).value / residual_loss(1.45, std::sqrt(n)).value ==
        doctest::Approx(std::pow(2.0, -0.225)));

  const auto s = exact_spectrum(2.0, 100);
  const auto full = residual_loss(s, 100.0);
  CHECK(full.value == 0.0);
  CHECK(full.form == ResidualForm::empirical);
  double tail = 0;
  for (std::size_t k = 11; k <= 100; ++k) tail += std::pow(static_cast<double>(k), -2.0);
  CHECK(residual_loss(s, 10.0).value == doctest::Approx(tail));
  CHECK_THROWS_AS(residual_loss(1.0, 10.0), AnalysisError);
  CHECK_THROWS_AS(residual_loss(2.0, 0.5), AnalysisError);
  CHECK_THROWS_AS(residual_loss(s, 101.0), AnalysisError);
}

TEST_CASE("covariance input errors") {
  CHECK_THROWS_AS(covariance_spectrum(Eigen::MatrixXd::Zero(1, 3)), AnalysisError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(covariance_spectrum(bad), AnalysisError);
}

}  // TEST_SUITE
