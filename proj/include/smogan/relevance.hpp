#pragma once

#include <utility>

#include "smogan/coredata.hpp"

namespace smogan {

/// Max of two logistic tails fitted from the box-plot statistics of the
/// targets. phi is 0.5 at each tail center and 0.9 at each whisker.
struct RelevanceFn {
  double lower_center = 0.0;
  double lower_whisker = 0.0;
  double lower_slope = 0.0;
  bool lower_active = false;

  double upper_center = 0.0;
  double upper_whisker = 0.0;
  double upper_slope = 0.0;
  bool upper_active = false;

  double median = 0.0;

  double operator()(double y) const noexcept;
};

inline constexpr double kDefaultRareThreshold = 0.8;

/// Type-7 (linear interpolation) sample quantile of already sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

RelevanceFn fit_relevance(const Vector& targets);
double phi(const RelevanceFn& fn, double y) noexcept;
Vector phi(const RelevanceFn& fn, const Vector& y);

struct RarePartition {
  Dataset rare;
  Dataset normal;
  std::vector<Eigen::Index> rare_rows;
  std::vector<Eigen::Index> normal_rows;
};

/// Rows with phi(y) >= t_r go to the rare part. Throws EmptyRareSet when
/// nothing qualifies.
RarePartition partition_rare(const Dataset& data, const RelevanceFn& fn, double t_r);

}  // namespace smogan
