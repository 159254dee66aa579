#include "csprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csprobe/error.hpp"

namespace csprobe::stats {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "spearman: length mismatch (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument,
                "spearman: need at least 3 paired values, got " +
                    std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::kNonFinite,
                  "spearman: non-finite value at position " + std::to_string(i));
    }
  }
}

}  // namespace

RankedVector rank_average(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  RankedVector out;
  out.values.assign(values.begin(), values.end());
  out.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = avg;
    i = j;
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "pearson: length mismatch or empty input");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::kUndefinedCorrelation,
                "correlation undefined: constant input vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const RankedVector rx = rank_average(x);
  const RankedVector ry = rank_average(y);
  return pearson(rx.ranks, ry.ranks);
}

double spearman_no_ties(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const RankedVector rx = rank_average(x);
  const RankedVector ry = rank_average(y);
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = rx.ranks[i] - ry.ranks[i];
    sum_d2 += d * d;
  }
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

SeedAggregate aggregate_seeds(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "aggregate_seeds: no values");
  }
  // Sort first so the floating-point result does not depend on input order.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SeedAggregate agg;
  agg.n = sorted.size();
  agg.min = sorted.front();
  agg.max = sorted.back();
  const double n = static_cast<double>(sorted.size());
  agg.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - agg.mean) * (v - agg.mean);
  agg.std = std::sqrt(ss / n);
  agg.mean = std::clamp(agg.mean, agg.min, agg.max);
  return agg;
}

}  // namespace csprobe::stats
