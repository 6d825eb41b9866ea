#include "smogan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "smogan/error.hpp"
#include "smogan/harness.hpp"
#include "smogan/serialization.hpp"

namespace smogan {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options shared by the pipeline subcommands. Values bound here only replace
/// the config when the flag was given on the command line.
struct Common {
  std::string input, target, config_path, out;
  std::uint64_t seed = 0;
  double t_r = kDefaultRareThreshold;
  int k = 5, per_seed = 0;
  int iterations = 0, batch_size = 0, critic_steps = 0;
  double lambda_gp = 0, alpha = 0, lr = 0, sigma = 0;
  const CLI::App* active = nullptr;  // the subcommand that was invoked
};

void add_data_options(CLI::App* app, Common& c, bool need_out = true) {
  app->add_option("--input", c.input, "input CSV")->required()->check(CLI::ExistingFile);
  app->add_option("--target", c.target, "target column name")->required();
  app->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  if (need_out) app->add_option("--out", c.out, "output path")->required();
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--t-r", c.t_r, "rarity threshold on phi");
}

void add_smogn_options(CLI::App* app, Common& c) {
  app->add_option("--k", c.k, "neighbours per rare seed");
  app->add_option("--per-seed", c.per_seed, "synthetic rows per seed (0 = balance)");
}

void add_gan_options(CLI::App* app, Common& c) {
  app->add_option("--iterations", c.iterations, "generator updates");
  app->add_option("--batch-size", c.batch_size, "minibatch size");
  app->add_option("--critic-steps", c.critic_steps, "critic updates per generator update");
  app->add_option("--lambda-gp", c.lambda_gp, "gradient penalty weight");
  app->add_option("--alpha", c.alpha, "MMD weight");
  app->add_option("--lr", c.lr, "Adam learning rate for both networks");
  app->add_option("--sigma", c.sigma, "fixed MMD bandwidth (default: median heuristic)");
}

bool given(const Common& c, const std::string& flag) {
  try {
    return c.active != nullptr && c.active->count(flag) > 0;
  } catch (const CLI::OptionNotFound&) {
    return false;
  }
}

ExperimentConfig resolve_config(const Common& c, ExperimentConfig cfg = {}) {
  if (!c.config_path.empty()) cfg = load_config(c.config_path, cfg);
  if (given(c, "--seed")) cfg.master_seed = c.seed;
  if (given(c, "--t-r")) cfg.t_r = c.t_r;
  if (given(c, "--k")) cfg.smogn.k = c.k;
  if (given(c, "--per-seed")) cfg.smogn.per_seed = c.per_seed;
  if (given(c, "--iterations")) cfg.gan.iterations = c.iterations;
  if (given(c, "--batch-size")) cfg.gan.batch_size = c.batch_size;
  if (given(c, "--critic-steps")) cfg.gan.critic_steps_per_gen = c.critic_steps;
  if (given(c, "--lambda-gp")) cfg.gan.lambda_gp = c.lambda_gp;
  if (given(c, "--alpha")) cfg.gan.alpha = c.alpha;
  if (given(c, "--lr")) {
    cfg.gan.critic_optimizer.learning_rate = c.lr;
    cfg.gan.generator_optimizer.learning_rate = c.lr;
  }
  if (given(c, "--sigma")) cfg.gan.bandwidth = {BandwidthMode::Fixed, c.sigma};
  cfg.smogn.t_r = cfg.t_r;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

/// Outputs must land in an existing directory and never overwrite an input.
void check_output(const std::string& out, const std::vector<std::string>& inputs) {
  if (out.empty()) return;
  const fs::path p(out);
  const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw UsageError("output directory '" + parent.string() + "' does not exist");
  std::error_code ec;
  for (const auto& in : inputs)
    if (!in.empty() && fs::exists(p) && fs::equivalent(p, in, ec))
      throw UsageError("output '" + out + "' would overwrite an input file");
}

std::vector<std::string> feature_and_target_names(const Dataset& d) {
  std::vector<std::string> names;
  for (const auto& n : d.column_names)
    if (n != d.target_name()) names.push_back(n);
  names.push_back(d.target_name());
  return names;
}

/// Pool rows back in original units, columns in joint order.
Matrix pool_original_units(const Scaler& s, const SyntheticPool& pool) {
  return pool.rows.rows() ? s.invert_joint(pool.rows) : Matrix(0, s.mean.size());
}

// ---------------------------------------------------------------------------

int cmd_oversample(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const Dataset data = load_csv(c.input, c.target);
  const Scaler scaler = fit_scaler(data);
  const Dataset scaled = scaler.apply(data);
  const RelevanceFn fn = fit_relevance(scaled.target);
  const SyntheticPool pool = oversample(scaled, fn, cfg.smogn, RngStream(cfg.master_seed, 0).child(1));
  write_pool_csv(c.out, pool_original_units(scaler, pool), feature_and_target_names(data), pool);
  return kExitOk;
}

int cmd_refine(const Common& c, const std::string& pool_path, const std::string& history_path,
               const std::string& checkpoint_dir) {
  const ExperimentConfig cfg = resolve_config(c);
  const Dataset data = load_csv(c.input, c.target);
  const auto names = feature_and_target_names(data);
  SyntheticPool pool = read_pool_csv(pool_path, names);

  const Scaler scaler = fit_scaler(data);
  const Dataset scaled = scaler.apply(data);
  const RelevanceFn fn = fit_relevance(scaled.target);
  const RarePartition part = partition_rare(scaled, fn, cfg.t_r);
  pool.rows = scaler.apply_joint(pool.rows);

  const GanModels models = train(part.rare.joint(), pool, cfg.gan,
                                 RngStream(cfg.master_seed, 0).child(10 + static_cast<std::uint64_t>(Mode::Smogan)));
  const SyntheticPool refined = refine(models.generator, pool);
  write_pool_csv(c.out, pool_original_units(scaler, refined), names, refined);
  if (!history_path.empty()) {
    std::ostringstream hs;
    write_history_csv(hs, models.history);
    write_text(history_path, hs.str());
  }
  if (!checkpoint_dir.empty()) {
    save_checkpoint(fs::path(checkpoint_dir) / "generator.json", models.generator);
    save_checkpoint(fs::path(checkpoint_dir) / "critic.json", models.critic);
  }
  return kExitOk;
}

int cmd_augment(const Common& c, const std::string& mode_text, const std::string& pool_out) {
  ExperimentConfig cfg = resolve_config(c);
  if (!mode_text.empty()) cfg.mode = parse_mode(mode_text);
  const Dataset data = load_csv(c.input, c.target);
  const Augmentation aug = augment(cfg.mode, data, cfg, RngStream(cfg.master_seed, 0));
  if (aug.degraded) std::cerr << "warning: augmentation skipped: " << aug.warning << '\n';
  write_csv(c.out, aug.augmented);
  if (!pool_out.empty())
    write_pool_csv(pool_out, pool_original_units(aug.scaler, aug.refined), feature_and_target_names(data),
                   aug.refined);
  return kExitOk;
}

int cmd_evaluate(const std::string& predictions, const std::string& truth_col, const std::string& pred_col,
                 const std::string& train_path, const std::string& train_target, double t_r,
                 const std::string& out) {
  const Dataset pred = load_csv(predictions, truth_col);
  Eigen::Index pc = -1, col = 0;
  for (const auto& n : pred.column_names) {
    if (n == truth_col) continue;
    if (n == pred_col) pc = col;
    ++col;
  }
  if (pc < 0) throw Error(Errc::MissingColumn, "predictions file lacks column '" + pred_col + "'");
  const Vector y = pred.target;
  const Vector yhat = pred.features.col(pc);

  Vector reference = y;
  if (!train_path.empty()) reference = load_csv(train_path, train_target.empty() ? truth_col : train_target).target;
  const RelevanceFn fn = fit_relevance(reference);
  const UtilityParams up = default_utility_params(reference, t_r);
  const PhiScores s = precision_recall_f1(y, yhat, fn, up);

  Json j = {{"n", y.size()},
            {"t_r", t_r},
            {"rmse", rmse(y, yhat)},
            {"sera", sera(y, yhat, fn)},
            {"precision", s.precision},
            {"recall", s.recall},
            {"f1", s.f1},
            {"empty_prediction_region", s.empty_prediction_region},
            {"empty_true_region", s.empty_true_region}};
  write_text(out, j.dump(2) + "\n");
  return kExitOk;
}

std::vector<Mode> parse_modes(const std::string& text) {
  std::vector<Mode> modes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      modes.push_back(parse_mode(item));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (modes.size() < 2) throw UsageError("--modes needs at least two modes");
  return modes;
}

int cmd_benchmark(const Common& c, const std::string& modes_text, int splits, bool splits_given, int threads,
                  const std::string& csv_out, bool timings, Eigen::Index synthetic_n) {
  ExperimentConfig cfg = resolve_config(c);
  if (splits_given) cfg.n_splits = splits;
  if (threads < 1) throw UsageError("--threads must be at least 1");
  const auto modes = parse_modes(modes_text);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const Dataset data = c.input.empty() ? synthetic_benchmark(synthetic_n, RngStream(cfg.master_seed, 7))
                                       : load_csv(c.input, c.target);
  const ExperimentReport rep = run_benchmark(modes, cfg, data, threads);
  write_text(c.out, report_to_json(rep, timings).dump(2) + "\n");
  if (!csv_out.empty()) {
    std::ostringstream cs;
    write_report_csv(cs, rep);
    write_text(csv_out, cs.str());
  }
  return kExitOk;
}

int cmd_diagnose(const Common& c, const std::string& initial_path, const std::string& refined_path,
                 int components, const std::string& pca_out) {
  const ExperimentConfig cfg = resolve_config(c);
  const Dataset data = load_csv(c.input, c.target);
  const auto names = feature_and_target_names(data);
  const Scaler scaler = fit_scaler(data);
  const Dataset scaled = scaler.apply(data);
  const RelevanceFn fn = fit_relevance(scaled.target);
  const Matrix real = partition_rare(scaled, fn, cfg.t_r).rare.joint();

  struct Source {
    std::string label;
    Matrix rows;
  };
  std::vector<Source> sources{{"real", real}};
  Json j;
  j["real_rare_rows"] = real.rows();
  j["t_r"] = cfg.t_r;
  for (const auto& [label, path] : {std::pair<std::string, std::string>{"initial", initial_path},
                                    std::pair<std::string, std::string>{"refined", refined_path}}) {
    if (path.empty()) continue;
    const Matrix rows = scaler.apply_joint(read_pool_csv(path, names).rows);
    j[label] = diagnostic_to_json(diagnose(real, rows, components));
    sources.push_back({label, rows});
  }
  if (sources.size() == 1) throw UsageError("diagnose needs --initial and/or --refined");
  write_text(c.out, j.dump(2) + "\n");

  if (!pca_out.empty()) {
    const PcaResult pca = pca_project(real, components);
    std::ostringstream ps;
    ps << "source";
    for (int k = 0; k < components; ++k) ps << ",pc" << k + 1;
    ps << '\n';
    for (const auto& s : sources) {
      const Matrix proj = pca.project(s.rows);
      for (Eigen::Index r = 0; r < proj.rows(); ++r) {
        ps << s.label;
        for (Eigen::Index k = 0; k < proj.cols(); ++k) ps << ',' << format_number(proj(r, k));
        ps << '\n';
      }
    }
    write_text(pca_out, ps.str());
  }
  return kExitOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::DivergedTraining:
      return kExitDiverged;
    case Errc::BadConfig:
    case Errc::UnknownLossSpec:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Two-stage oversampling for imbalanced regression", "smogan"};
  app.set_version_flag("--version", std::string("smogan ") + kVersion + " (config schema " +
                                        std::to_string(kConfigSchemaVersion) + ")");
  app.require_subcommand(1);

  Common c;
  std::string pool_path, history_path, checkpoint_dir, mode_text, pool_out, modes_text = "baseline,smogn,smogan";
  std::string predictions, truth_col = "y", pred_col = "yhat", train_path, train_target, csv_out;
  std::string initial_path, refined_path, pca_out;
  int splits = 25, threads = 1, components = 2;
  bool timings = false;
  Eigen::Index synthetic_n = 600;
  double eval_t_r = kDefaultRareThreshold;

  auto* over = app.add_subcommand("oversample", "Stage-1 synthetic pool as CSV");
  add_data_options(over, c);
  add_smogn_options(over, c);

  auto* ref = app.add_subcommand("refine", "train the refinement GAN on a pool and emit the refined pool");
  add_data_options(ref, c);
  add_gan_options(ref, c);
  ref->add_option("--pool", pool_path, "pool CSV from oversample")->required()->check(CLI::ExistingFile);
  ref->add_option("--history", history_path, "training history CSV");
  ref->add_option("--checkpoint-dir", checkpoint_dir, "directory for generator/critic JSON")
      ->check(CLI::ExistingDirectory);

  auto* aug = app.add_subcommand("augment", "full pipeline, emits the augmented training CSV");
  add_data_options(aug, c);
  add_smogn_options(aug, c);
  add_gan_options(aug, c);
  aug->add_option("--mode", mode_text, "baseline | smogn | ganonly | smogan (default smogan)");
  aug->add_option("--pool-out", pool_out, "also write the synthetic pool");

  auto* ev = app.add_subcommand("evaluate", "metrics JSON for a predictions file");
  ev->add_option("--predictions", predictions, "CSV with truth and prediction columns")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--truth", truth_col, "truth column (default y)");
  ev->add_option("--pred", pred_col, "prediction column (default yhat)");
  ev->add_option("--train", train_path, "training CSV used to fit phi and tau")->check(CLI::ExistingFile);
  ev->add_option("--train-target", train_target, "target column of --train (default: --truth)");
  ev->add_option("--t-r", eval_t_r, "rarity threshold on phi");
  ev->add_option("--out", c.out, "output JSON")->required();

  auto* bench = app.add_subcommand("benchmark", "paired multi-split comparison of modes");
  bench->add_option("--input", c.input, "input CSV (default: synthetic benchmark data)")->check(CLI::ExistingFile);
  bench->add_option("--target", c.target, "target column name");
  bench->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  bench->add_option("--out", c.out, "report JSON")->required();
  bench->add_option("--seed", c.seed, "master seed");
  bench->add_option("--t-r", c.t_r, "rarity threshold on phi");
  add_smogn_options(bench, c);
  add_gan_options(bench, c);
  bench->add_option("--modes", modes_text, "comma-separated modes");
  auto* splits_opt = bench->add_option("--splits", splits, "number of random splits");
  bench->add_option("--threads", threads, "worker threads (default 1)");
  bench->add_option("--csv", csv_out, "flat CSV table");
  bench->add_flag("--record-timings", timings, "include wall-clock timings in the JSON");
  bench->add_option("--synthetic-rows", synthetic_n, "rows of synthetic data when --input is absent");

  auto* diag = app.add_subcommand("diagnose", "distribution diagnostics for pools against real rare rows");
  add_data_options(diag, c);
  diag->add_option("--initial", initial_path, "Stage-1 pool CSV")->check(CLI::ExistingFile);
  diag->add_option("--refined", refined_path, "refined pool CSV")->check(CLI::ExistingFile);
  diag->add_option("--components", components, "PCA components (default 2)");
  diag->add_option("--pca-out", pca_out, "PCA projection CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  const std::string inputs[] = {c.input, pool_path, initial_path, refined_path, predictions, train_path};
  const std::vector<std::string> input_list(std::begin(inputs), std::end(inputs));
  try {
    for (const auto* sub : app.get_subcommands()) c.active = sub;
    if (*bench) {
      if (!c.input.empty() && c.target.empty()) throw UsageError("--target is required with --input");
    }
    for (const auto* p : {&c.out, &history_path, &pool_out, &csv_out, &pca_out}) check_output(*p, input_list);

    if (*over) return cmd_oversample(c);
    if (*ref) return cmd_refine(c, pool_path, history_path, checkpoint_dir);
    if (*aug) return cmd_augment(c, mode_text, pool_out);
    if (*ev) return cmd_evaluate(predictions, truth_col, pred_col, train_path, train_target, eval_t_r, c.out);
    if (*bench)
      return cmd_benchmark(c, modes_text, splits, splits_opt->count() > 0, threads, csv_out, timings, synthetic_n);
    if (*diag) return cmd_diagnose(c, initial_path, refined_path, components, pca_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace smogan
