#include "smogan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "smogan/error.hpp"

namespace smogan {

std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::Baseline: return "baseline";
    case Mode::SmognOnly: return "smogn";
    case Mode::GanOnly: return "ganonly";
    case Mode::Smogan: return "smogan";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::Baseline, Mode::SmognOnly, Mode::GanOnly, Mode::Smogan})
    if (mode_name(m) == name) return m;
  if (name == "gan-only" || name == "gan") return Mode::GanOnly;
  throw Error(Errc::BadConfig, "unknown mode '" + std::string(name) +
                                   "' (expected baseline, smogn, ganonly or smogan)");
}

void ExperimentConfig::validate() const {
  if (n_splits < 1) throw Error(Errc::BadConfig, "n_splits must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(Errc::BadConfig, "test_fraction must lie in (0, 1)");
  if (!(t_r > 0.0 && t_r < 1.0)) throw Error(Errc::BadConfig, "t_r must lie in (0, 1)");
  if (knn_k < 1) throw Error(Errc::BadConfig, "knn_k must be >= 1");
  if (smogn.k < 1) throw Error(Errc::BadConfig, "smogn k must be >= 1");
  if (smogn.per_seed < 0) throw Error(Errc::BadConfig, "per_seed must be >= 0 (0 = automatic)");
  if (!(smogn.jitter_cap >= 0.0)) throw Error(Errc::BadConfig, "jitter_cap must be >= 0");
  gan.validate();
}

Vector knn_fit_predict(const Dataset& train, const Matrix& test_features, int k) {
  const auto n = train.rows();
  if (k < 1 || k > n)
    throw Error(Errc::KTooLarge, "k = " + std::to_string(k) + " with " + std::to_string(n) +
                                     " training rows");
  if (test_features.cols() != train.feature_count())
    throw Error(Errc::DimensionMismatch, "test features differ in width from training features");
  Vector pred(test_features.rows());
  std::vector<std::pair<double, Eigen::Index>> cand(static_cast<std::size_t>(n));
  for (Eigen::Index q = 0; q < test_features.rows(); ++q) {
    for (Eigen::Index i = 0; i < n; ++i)
      cand[static_cast<std::size_t>(i)] = {(train.features.row(i) - test_features.row(q)).squaredNorm(), i};
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += train.target[cand[static_cast<std::size_t>(j)].second];
    pred[q] = s / static_cast<double>(k);
  }
  return pred;
}

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;     // "split"
constexpr std::uint64_t kPipelineStream = 0x706970656cULL;  // "pipel"

bool degradable(Errc c) {
  return c == Errc::EmptyRareSet || c == Errc::RareSetTooSmall || c == Errc::DegenerateDistribution;
}

Dataset concat(const Dataset& a, const Matrix& extra_joint) {
  Matrix joint(a.rows() + extra_joint.rows(), a.feature_count() + 1);
  joint << a.joint(), extra_joint;
  return Dataset::from_joint(joint, a.column_names);
}

}  // namespace

RngStream split_stream(std::uint64_t master_seed, int split_index) {
  return RngStream(master_seed, kSplitStream).child(static_cast<std::uint64_t>(split_index));
}

RngStream pipeline_stream(std::uint64_t master_seed, int split_index) {
  return RngStream(master_seed, kPipelineStream).child(static_cast<std::uint64_t>(split_index));
}

Augmentation augment(Mode mode, const Dataset& training, const ExperimentConfig& config, RngStream rng) {
  Augmentation aug;
  aug.scaler = fit_scaler(training);
  aug.augmented = training;
  if (mode == Mode::Baseline) return aug;

  const Dataset scaled = aug.scaler.apply(training);
  try {
    const RelevanceFn fn = fit_relevance(scaled.target);
    const RarePartition part = partition_rare(scaled, fn, config.t_r);
    aug.rare = part.rare;
    if (part.rare.rows() < 2) throw Error(Errc::RareSetTooSmall, "a single rare row has no neighbours");

    SmognParams params = config.smogn;
    params.t_r = config.t_r;
    if (mode == Mode::GanOnly) {
      const int per_seed = params.per_seed > 0 ? params.per_seed
                                               : balance_per_seed(part.rare.rows(), part.normal.rows());
      aug.initial = noise_pool(per_seed * part.rare.rows(), scaled.feature_count() + 1, rng.child(2));
    } else {
      aug.initial = oversample(scaled, fn, params, rng.child(1));
    }

    if (mode == Mode::SmognOnly) {
      aug.refined = aug.initial;
    } else {
      aug.models = train(part.rare.joint(), aug.initial, config.gan,
                         rng.child(10 + static_cast<std::uint64_t>(mode)));
      aug.refined = refine(aug.models->generator, aug.initial);
    }
  } catch (const DivergedTraining&) {
    throw;
  } catch (const Error& e) {
    if (!degradable(e.code())) throw;
    aug.degraded = true;
    aug.warning = e.what();
    aug.initial = {};
    aug.refined = {};
    return aug;
  }
  aug.augmented = concat(training, aug.scaler.invert_joint(aug.refined.rows));
  return aug;
}

SplitResult run_split(const ExperimentConfig& config, const Dataset& data, int split_index) {
  const auto start = std::chrono::steady_clock::now();
  const Split split = train_test_split(data, config.test_fraction, split_stream(config.master_seed, split_index));
  const Augmentation aug = augment(config.mode, split.train, config, pipeline_stream(config.master_seed, split_index));

  // k-NN runs in the feature space standardized by the training rows.
  const Eigen::Index p = data.feature_count();
  const Vector fmean = aug.scaler.mean.head(p);
  const Vector fstd = aug.scaler.std.head(p);
  auto scale_features = [&](const Matrix& f) {
    return Matrix(((f.rowwise() - fmean.transpose()).array().rowwise() / fstd.transpose().array()).matrix());
  };
  Dataset knn_train;
  knn_train.features = scale_features(aug.augmented.features);
  knn_train.target = aug.augmented.target;
  knn_train.column_names = aug.augmented.column_names;
  const int k = std::min<int>(config.knn_k, static_cast<int>(knn_train.rows()));
  const Vector pred = knn_fit_predict(knn_train, scale_features(split.test.features), k);

  // Tail-less training targets carry no relevance; phi is taken as zero.
  RelevanceFn fn;
  try {
    fn = fit_relevance(split.train.target);
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateDistribution) throw;
  }
  const UtilityParams up = default_utility_params(split.train.target, config.t_r);
  const PhiScores scores = precision_recall_f1(split.test.target, pred, fn, up);

  SplitResult r;
  r.split_index = split_index;
  r.mode = config.mode;
  r.rmse = rmse(split.test.target, pred);
  r.sera = sera(split.test.target, pred, fn);
  r.precision = scores.precision;
  r.recall = scores.recall;
  r.f1 = scores.f1;
  r.empty_region = scores.empty_region();
  r.train_size = split.train.rows();
  r.train_pool_size = aug.augmented.rows();
  r.rare_count = aug.rare.rows();
  r.degraded = aug.degraded;
  r.warning = aug.warning;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::Rmse: return "rmse";
    case Metric::Sera: return "sera";
    case Metric::Precision: return "precision";
    case Metric::Recall: return "recall";
    case Metric::F1: return "f1";
  }
  return "unknown";
}

bool lower_is_better(Metric m) noexcept { return m == Metric::Rmse || m == Metric::Sera; }

double metric_value(const SplitResult& r, Metric m) noexcept {
  switch (m) {
    case Metric::Rmse: return r.rmse;
    case Metric::Sera: return r.sera;
    case Metric::Precision: return r.precision;
    case Metric::Recall: return r.recall;
    case Metric::F1: return r.f1;
  }
  return 0.0;
}

const MetricComparison& ComparisonSummary::at(Metric m) const {
  for (const auto& c : metrics)
    if (c.metric == m) return c;
  throw Error(Errc::BadConfig, "metric missing from comparison");
}

ComparisonSummary compare(const std::vector<SplitResult>& a, const std::vector<SplitResult>& b) {
  if (a.size() != b.size() || a.empty())
    throw Error(Errc::LengthMismatch, "comparisons need equally many, non-zero splits");
  ComparisonSummary s;
  s.method_a = a.front().mode;
  s.method_b = b.front().mode;
  for (Metric m : kAllMetrics) {
    MetricComparison c;
    c.metric = m;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].split_index != b[i].split_index)
        throw Error(Errc::LengthMismatch, "split sequences are not paired");
      const double va = metric_value(a[i], m);
      const double vb = metric_value(b[i], m);
      diffs.push_back(va - vb);
      const bool a_better = lower_is_better(m) ? va < vb : va > vb;
      const bool b_better = lower_is_better(m) ? vb < va : vb > va;
      c.wins_a += a_better;
      c.wins_b += b_better;
      c.ties += !a_better && !b_better;
    }
    c.p_value = wilcoxon_signed_rank(diffs).p_value;
    c.significant = c.p_value < kSignificanceLevel;
    s.metrics.push_back(c);
  }
  return s;
}

const std::vector<SplitResult>& ExperimentReport::for_mode(Mode m) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == m) return results[i];
  throw Error(Errc::BadConfig, "mode not in report: " + std::string(mode_name(m)));
}

ExperimentReport run_benchmark(const std::vector<Mode>& modes, const ExperimentConfig& config,
                               const Dataset& data, int threads) {
  config.validate();
  if (modes.size() < 2) throw Error(Errc::BadConfig, "benchmark needs at least two modes");
  ExperimentReport rep;
  rep.config = config;
  rep.modes = modes;
  rep.results.assign(modes.size(), std::vector<SplitResult>(static_cast<std::size_t>(config.n_splits)));
  rep.mode_seconds.assign(modes.size(), 0.0);

  const std::size_t jobs = modes.size() * static_cast<std::size_t>(config.n_splits);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const auto mi = j / static_cast<std::size_t>(config.n_splits);
      const auto si = static_cast<int>(j % static_cast<std::size_t>(config.n_splits));
      try {
        ExperimentConfig c = config;
        c.mode = modes[mi];
        rep.results[mi][static_cast<std::size_t>(si)] = run_split(c, data, si);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t m = 0; m < modes.size(); ++m)
    for (const auto& r : rep.results[m]) rep.mode_seconds[m] += r.seconds;
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a + 1; b < modes.size(); ++b)
      rep.comparisons.push_back(compare(rep.results[a], rep.results[b]));
  return rep;
}

Dataset synthetic_benchmark(Eigen::Index n, RngStream rng) {
  Dataset d;
  d.features.resize(n, 4);
  d.target.resize(n);
  d.column_names = {"x1", "x2", "x3", "x4", "y"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double x1 = z1;
    const double x2 = 0.6 * z1 + 0.8 * z2;
    const double x3 = -2.0 + 4.0 * rng.uniform();
    const double x4 = rng.normal();
    const double noise = rng.normal();
    d.features.row(i) << x1, x2, x3, x4;
    d.target[i] = std::exp(0.8 * x1 + 0.3 * x2) + 0.5 * std::sin(2.0 * x3) + 0.3 * x4 * x4 + 0.2 * noise;
  }
  return d;
}

}  // namespace smogan
