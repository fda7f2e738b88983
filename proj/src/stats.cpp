#include "scalelens/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace scalelens {

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AnalysisError("ols: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw AnalysisError("ols: need at least 2 points");

  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw AnalysisError("ols: degenerate variance in x");

  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  fit.slope_stderr = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx)
                           : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw AnalysisError("mean of empty sequence");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> sample_std(std::span<const double> v) {
  if (v.size() < 2) return std::nullopt;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw AnalysisError("quantile of empty sequence");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double student_t_critical(double confidence, double dof) {
  const boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SCALELENS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace scalelens
