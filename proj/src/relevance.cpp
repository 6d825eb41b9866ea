#include "smogan/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "smogan/error.hpp"

namespace smogan {

namespace {

constexpr double kTailTolerance = 1e-12;

double logistic(double t) noexcept {
  // Split by sign so exp never overflows.
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const auto n = sorted.size();
  if (n == 0) throw Error(Errc::TooFewValues, "quantile of empty sample");
  const double h = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

RelevanceFn fit_relevance(const Vector& targets) {
  if (targets.size() < 4) throw Error(Errc::TooFewValues, "relevance fit needs at least 4 targets");
  if (!targets.allFinite()) throw Error(Errc::ParseError, "relevance fit on non-finite targets");

  std::vector<double> v(targets.data(), targets.data() + targets.size());
  std::sort(v.begin(), v.end());
  const double q1 = quantile_sorted(v, 0.25);
  const double q3 = quantile_sorted(v, 0.75);
  const double iqr = q3 - q1;
  const double scale = std::max({1.0, std::abs(q1), std::abs(q3)});

  RelevanceFn fn;
  fn.median = quantile_sorted(v, 0.5);

  fn.upper_whisker = std::min(v.back(), q3 + 1.5 * iqr);
  fn.upper_center = 0.5 * (q3 + fn.upper_whisker);
  fn.upper_active = (fn.upper_whisker - q3) > kTailTolerance * scale;
  if (fn.upper_active) fn.upper_slope = std::log(9.0) / (fn.upper_whisker - fn.upper_center);

  fn.lower_whisker = std::max(v.front(), q1 - 1.5 * iqr);
  fn.lower_center = 0.5 * (q1 + fn.lower_whisker);
  fn.lower_active = (q1 - fn.lower_whisker) > kTailTolerance * scale;
  if (fn.lower_active) fn.lower_slope = std::log(9.0) / (fn.lower_center - fn.lower_whisker);

  if (!fn.upper_active && !fn.lower_active)
    throw Error(Errc::DegenerateDistribution, "targets have no tails (IQR and whiskers collapse)");
  return fn;
}

double RelevanceFn::operator()(double y) const noexcept {
  // Each tail only acts on its own side of the median, which keeps phi
  // monotone on both sides even when one tail is much longer.
  double r = 0.0;
  if (upper_active && y >= median) r = logistic(upper_slope * (y - upper_center));
  if (lower_active && y <= median) r = std::max(r, logistic(lower_slope * (lower_center - y)));
  return r;
}

double phi(const RelevanceFn& fn, double y) noexcept { return fn(y); }

Vector phi(const RelevanceFn& fn, const Vector& y) {
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = fn(y[i]);
  return out;
}

RarePartition partition_rare(const Dataset& data, const RelevanceFn& fn, double t_r) {
  if (data.rows() < 1) throw Error(Errc::EmptyData, "cannot partition an empty dataset");
  RarePartition part;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    (fn(data.target[i]) >= t_r ? part.rare_rows : part.normal_rows).push_back(i);
  if (part.rare_rows.empty())
    throw Error(Errc::EmptyRareSet, "no row reaches relevance threshold " + std::to_string(t_r));
  part.rare = data.select(part.rare_rows);
  part.normal = data.select(part.normal_rows);
  return part;
}

}  // namespace smogan
