#pragma once

// Shared numerical plumbing: error types, least squares, summary statistics,
// seeded random streams and a deterministic block-parallel loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scalelens {

/// Input that violates a documented contract (schema, range, length).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An analysis whose preconditions do not hold for the given data.
class AnalysisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;  // NaN when n <= 2
  std::size_t n = 0;
};

/// Ordinary least squares of y on x. Throws AnalysisError when n < 2 or
/// x has zero variance.
LinearFit ols(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);

/// Sample standard deviation (n - 1 denominator). Empty optional when n < 2.
std::optional<double> sample_std(std::span<const double> v);

/// Linear-interpolation quantile of already sorted data, q in [0, 1]
/// (position q * (n - 1), the "type 7" rule).
double quantile_sorted(std::span<const double> sorted, double q);

/// Two-sided Student t critical value t_{1 - a/2, dof}.
double student_t_critical(double confidence, double dof);

/// Two-sided p-value of a Student t statistic.
double student_t_two_sided_p(double t, double dof);

// Random streams ------------------------------------------------------------

/// Name recorded in output metadata for reproducibility.
inline constexpr const char* kRngAlgorithm = "mt19937_64 via seed_seq(seed, stream)";

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream). The same pair always yields the
/// same sequence regardless of which thread draws from it.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Number of worker threads: explicit value if > 0, else SCALELENS_THREADS,
/// else 1.
unsigned resolve_threads(unsigned requested);

/// Runs body(i) for i in [0, n) over `threads` workers. Each index is handled
/// exactly once; callers write into index-addressed slots so the result is
/// independent of scheduling.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Trials are grouped into fixed-size blocks, one random stream per block.
inline constexpr std::size_t kTrialsPerBlock = 256;

}  // namespace scalelens
