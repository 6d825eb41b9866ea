#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smogan/coredata.hpp"
#include "smogan/distgan.hpp"
#include "smogan/metrics.hpp"
#include "smogan/relevance.hpp"
#include "smogan/smogn.hpp"

namespace smogan {

enum class Mode { Baseline, SmognOnly, GanOnly, Smogan };

std::string_view mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view name);

struct ExperimentConfig {
  Mode mode = Mode::Smogan;
  int n_splits = 25;
  double test_fraction = 0.2;
  double t_r = kDefaultRareThreshold;
  SmognParams smogn{};
  GanConfig gan{};
  int knn_k = 5;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// Mean target of the k nearest training rows (Euclidean on the given feature
/// space); ties go to the lower row index.
Vector knn_fit_predict(const Dataset& train, const Matrix& test_features, int k);

/// Result of augmenting one training set.
struct Augmentation {
  Dataset augmented;      // train rows followed by synthetic rows, original units
  Scaler scaler;          // fitted on the training rows (joint)
  SyntheticPool initial;  // seeds fed to the generator (scaled units)
  SyntheticPool refined;  // generator output, or Stage-1 pool for SmognOnly (scaled)
  Dataset rare;           // real rare training rows (scaled)
  std::optional<GanModels> models;
  bool degraded = false;  // fell back to the unaugmented training set
  std::string warning;
};

/// Runs the mode's pipeline on a training set. rng must be the per-split
/// pipeline stream; Stage 1 uses a sub-stream shared by all modes so SMOGN and
/// SMOGAN see the same initial pool.
Augmentation augment(Mode mode, const Dataset& train, const ExperimentConfig& config, RngStream rng);

struct SplitResult {
  int split_index = 0;
  Mode mode = Mode::Baseline;
  double rmse = 0.0;
  double sera = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Eigen::Index train_size = 0;
  Eigen::Index train_pool_size = 0;
  Eigen::Index rare_count = 0;
  bool empty_region = false;
  bool degraded = false;
  std::string warning;
  double seconds = 0.0;  // not part of the deterministic report
};

RngStream split_stream(std::uint64_t master_seed, int split_index);
RngStream pipeline_stream(std::uint64_t master_seed, int split_index);

SplitResult run_split(const ExperimentConfig& config, const Dataset& data, int split_index);

enum class Metric { Rmse, Sera, Precision, Recall, F1 };
inline constexpr Metric kAllMetrics[] = {Metric::Rmse, Metric::Sera, Metric::Precision,
                                         Metric::Recall, Metric::F1};

std::string_view metric_name(Metric m) noexcept;
bool lower_is_better(Metric m) noexcept;
double metric_value(const SplitResult& r, Metric m) noexcept;

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n_used = 0;  // non-zero differences
  bool exact = true;
  bool empty = false;      // all differences were zero
};

/// Two-sided signed-rank test. Exact enumeration for n <= 12 non-zero
/// differences, tie-corrected normal approximation otherwise.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs);
WilcoxonResult wilcoxon_exact(const std::vector<double>& diffs);
WilcoxonResult wilcoxon_normal(const std::vector<double>& diffs);

inline constexpr double kSignificanceLevel = 0.05;
inline constexpr std::size_t kExactWilcoxonMax = 12;

struct MetricComparison {
  Metric metric = Metric::Rmse;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  double p_value = 1.0;
  bool significant = false;
};

struct ComparisonSummary {
  Mode method_a = Mode::Baseline;
  Mode method_b = Mode::Baseline;
  std::vector<MetricComparison> metrics;

  const MetricComparison& at(Metric m) const;
};

ComparisonSummary compare(const std::vector<SplitResult>& a, const std::vector<SplitResult>& b);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<Mode> modes;
  std::vector<std::vector<SplitResult>> results;  // results[mode][split]
  std::vector<ComparisonSummary> comparisons;     // every pair, in request order
  std::vector<double> mode_seconds;

  const std::vector<SplitResult>& for_mode(Mode m) const;
};

/// Runs every mode on the same split sequence. threads > 1 runs splits
/// concurrently; results do not depend on the thread count.
ExperimentReport run_benchmark(const std::vector<Mode>& modes, const ExperimentConfig& config,
                               const Dataset& data, int threads = 1);

/// Seeded dataset with correlated features and a right-skewed nonlinear
/// target (about 8% of rows reach phi >= 0.8).
Dataset synthetic_benchmark(Eigen::Index n, RngStream rng);

}  // namespace smogan
