#pragma once

#include <span>
#include <vector>

namespace csprobe::stats {

// Values paired with their 1-based average ranks (ties share the mean rank).
struct RankedVector {
  std::vector<double> values;
  std::vector<double> ranks;
};

RankedVector rank_average(std::span<const double> values);

// Spearman's rho as the Pearson correlation of average ranks, so ties are
// handled exactly. Requires equal lengths >= 3 and finite values; throws
// kUndefinedCorrelation when either side has zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

// Classical 1 - 6*sum(d^2)/(n(n^2-1)). Only valid without ties; kept as a
// cross-check for spearman().
double spearman_no_ties(std::span<const double> x, std::span<const double> y);

double pearson(std::span<const double> x, std::span<const double> y);

struct SeedAggregate {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

SeedAggregate aggregate_seeds(std::span<const double> values);

}  // namespace csprobe::stats
