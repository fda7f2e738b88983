#pragma once

// Independent reference implementations and fixtures shared by the unit,
// property and acceptance binaries. Nothing here calls the code under test.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "scalelens/record.hpp"
#include "scalelens/scaling.hpp"

namespace scalelens::testkit {

struct PublishedRow {
  const char* config;
  std::int64_t n_params;
  double acc_pct;
  double ece;  // NaN where not transcribed
};

const std::vector<PublishedRow>& scalecnn_published();
const std::vector<PublishedRow>& mobilenet_published();

/// One seed-mean error-rate point per row.
std::vector<ScalingPoint> published_points(const std::vector<PublishedRow>& rows);

// Oracles ------------------------------------------------------------------------

/// Double loop over all ordered pairs.
double brute_gini(const std::vector<double>& x);

/// Intersection over union of index sets.
double brute_jaccard(const std::set<std::size_t>& a, const std::set<std::size_t>& b);

/// Correct-in-class / support-of-class by direct counting.
std::vector<double> brute_per_class(const std::vector<std::int32_t>& truth, const std::vector<std::int32_t>& pred,
                                    std::size_t n_classes);

struct TTest {
  double t;
  double dof;
};
/// Pooled-variance two-sample t statistic written out term by term.
TTest hand_pooled_t(const std::vector<double>& a, const std::vector<double>& b);

/// Slope, intercept and R^2 of y on x from the normal equations, in long
/// double.
struct Line {
  long double slope, intercept, r2;
};
Line normal_equations(const std::vector<double>& x, const std::vector<double>& y);

/// ECE with bin membership decided by explicit interval comparisons.
double brute_ece(const std::vector<std::uint8_t>& correct, const std::vector<double>& conf, std::size_t n_bins);

// Fixtures -----------------------------------------------------------------------

class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);

/// Small random corpus with every optional field exercised at random.
Corpus random_corpus(std::uint64_t seed, std::size_t max_test = 200, std::size_t max_classes = 12);

// Properties ---------------------------------------------------------------------

struct PropertyResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
  double seconds = 0.0;
  bool ok() const { return cases > 0 && failures == 0; }
};

struct Property {
  std::string name;
  std::size_t default_cases;
  std::function<PropertyResult(std::uint64_t seed, std::size_t cases)> run;
};

/// Every invariant, one entry each.
const std::vector<Property>& properties();

}  // namespace scalelens::testkit
