#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smogan/error.hpp"
#include "smogan/relevance.hpp"

using namespace smogan;

namespace {

Vector range_vector(int n) { return Vector::LinSpaced(n, 0.0, n - 1.0); }

Vector skewed(int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = std::exp(rng.normal());
  return v;
}

Dataset with_targets(const Vector& y) {
  Dataset d;
  d.features = Matrix::Zero(y.size(), 1);
  for (Eigen::Index i = 0; i < y.size(); ++i) d.features(i, 0) = static_cast<double>(i);
  d.target = y;
  d.column_names = {"i", "y"};
  return d;
}

}  // namespace

TEST_CASE("quantiles are type-7") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(24.75).epsilon(1e-15));
  CHECK(quantile_sorted(v, 0.75) == doctest::Approx(74.25).epsilon(1e-15));
  CHECK(quantile_sorted(v, 0.0) == 0.0);
  CHECK(quantile_sorted(v, 1.0) == 99.0);
}

TEST_CASE("fit on 0..99") {
  const RelevanceFn fn = fit_relevance(range_vector(100));
  // Q3 + 1.5 IQR = 148.5 > 99 so the whisker is the maximum.
  CHECK(fn.upper_whisker == 99.0);
  CHECK(fn.lower_whisker == 0.0);
  CHECK(fn.upper_center == doctest::Approx((74.25 + 99.0) / 2));
  CHECK(fn.lower_center == doctest::Approx(24.75 / 2));
  CHECK(fn.upper_slope == doctest::Approx(std::log(9.0) / (99.0 - 86.625)));
  CHECK(fn.median == 49.5);
  // Independent closed form at the median.
  const double kr = std::log(9.0) / (99.0 - 86.625);
  const double at_median = 1.0 / (1.0 + std::exp(-kr * (49.5 - 86.625)));
  CHECK(phi(fn, 49.5) == doctest::Approx(at_median).epsilon(1e-12));
  CHECK(phi(fn, 49.5) < 0.05);
}

TEST_CASE("anchors at centers and whiskers") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RelevanceFn fn = fit_relevance(skewed(200, seed));
    REQUIRE(fn.upper_active);
    CHECK(phi(fn, fn.upper_center) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(phi(fn, fn.upper_whisker) == doctest::Approx(0.9).epsilon(1e-12));
    if (fn.lower_active) {
      CHECK(phi(fn, fn.lower_center) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(phi(fn, fn.lower_whisker) == doctest::Approx(0.9).epsilon(1e-12));
    }
    CHECK(phi(fn, fn.median) < 0.5);
    CHECK(phi(fn, 1e6) == doctest::Approx(1.0));
    CHECK(phi(fn, 1e300) <= 1.0);
  }
}

TEST_CASE("degenerate and short inputs") {
  CHECK_THROWS_AS(fit_relevance(Vector::Constant(10, 7.0)), Error);
  try {
    fit_relevance(Vector::Constant(10, 7.0));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateDistribution);
  }
  try {
    fit_relevance(Vector::LinSpaced(3, 0, 2));
    FAIL("expected TooFewValues");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewValues);
  }
}

TEST_CASE("a side without a tail is inactive") {
  // Lower tail absent: min coincides with Q1.
  Vector y(8);
  y << 1, 1, 1, 1, 2, 3, 4, 20;
  const RelevanceFn fn = fit_relevance(y);
  CHECK_FALSE(fn.lower_active);
  CHECK(fn.upper_active);
  CHECK(phi(fn, -1e9) < 0.5);
}

TEST_CASE("phi bounds and monotonicity on each side of the median") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Vector y = skewed(60, seed + 100);
    const RelevanceFn fn = fit_relevance(y);
    const double lo = y.minCoeff() - 5, hi = y.maxCoeff() + 5;
    double prev = phi(fn, fn.median);
    for (int i = 1; i <= 400; ++i) {
      const double v = fn.median + (hi - fn.median) * i / 400.0;
      const double p = phi(fn, v);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(p >= prev);
      prev = p;
    }
    prev = 0.0;  // just below the median the upper tail no longer contributes
    for (int i = 1; i <= 400; ++i) {
      const double v = fn.median - (fn.median - lo) * i / 400.0;
      const double p = phi(fn, v);
      CHECK(p >= prev);
      prev = p;
    }
  }
}

TEST_CASE("shift and scale equivariance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector y = skewed(80, seed);
    const double a = 3.7, b = -12.5;
    const RelevanceFn f1 = fit_relevance(y);
    const RelevanceFn f2 = fit_relevance((a * y.array() + b).matrix());
    for (int i = 0; i < 50; ++i) {
      const double v = y.minCoeff() - 1 + (y.maxCoeff() - y.minCoeff() + 2) * i / 49.0;
      CHECK(std::abs(phi(f1, v) - phi(f2, a * v + b)) <= 1e-9);
    }
  }
}

TEST_CASE("partition by threshold") {
  const Vector y = skewed(300, 5);
  const RelevanceFn fn = fit_relevance(y);
  const Dataset d = with_targets(y);
  const RarePartition p = partition_rare(d, fn, 0.8);
  CHECK(p.rare.rows() + p.normal.rows() == d.rows());
  for (Eigen::Index i = 0; i < p.rare.rows(); ++i) CHECK(phi(fn, p.rare.target[i]) >= 0.8);
  for (Eigen::Index i = 0; i < p.normal.rows(); ++i) CHECK(phi(fn, p.normal.target[i]) < 0.8);
  CHECK(std::is_sorted(p.rare_rows.begin(), p.rare_rows.end()));
  std::vector<Eigen::Index> all = p.rare_rows;
  all.insert(all.end(), p.normal_rows.begin(), p.normal_rows.end());
  std::sort(all.begin(), all.end());
  for (Eigen::Index i = 0; i < d.rows(); ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

  const RarePartition strict = partition_rare(d, fn, 0.95);
  for (auto r : strict.rare_rows)
    CHECK(std::find(p.rare_rows.begin(), p.rare_rows.end(), r) != p.rare_rows.end());
}

TEST_CASE("partition picks phi >= t rows in order") {
  // Targets placed by inverting the upper sigmoid: phi = 0.9, 0.5, 0.81.
  const RelevanceFn fn = fit_relevance(range_vector(100));
  auto at = [&](double p) { return fn.upper_center + std::log(p / (1 - p)) / fn.upper_slope; };
  Vector y(3);
  y << at(0.9), at(0.5), at(0.81);
  CHECK(phi(fn, y[2]) == doctest::Approx(0.81).epsilon(1e-12));
  const RarePartition p = partition_rare(with_targets(y), fn, 0.8);
  CHECK(p.rare_rows == std::vector<Eigen::Index>{0, 2});
}

TEST_CASE("partition: empty rare set") {
  const RelevanceFn fn = fit_relevance(range_vector(100));
  const Dataset d = with_targets(range_vector(100));
  try {
    partition_rare(d, fn, 0.999);
    FAIL("expected EmptyRareSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyRareSet);
  }
}
