#include "smogan/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "smogan/error.hpp"

namespace smogan {

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(Errc::Io, "cannot format number");
  return std::string(buf, ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  return out;
}

void write_header(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << csv_field(names[c]);
}

void write_row(std::ostream& out, const Matrix& rows, Eigen::Index r) {
  for (Eigen::Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_number(rows(r, c));
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
  write_header(out, data.column_names);
  out << '\n';
  const Matrix joint = data.joint();
  for (Eigen::Index r = 0; r < joint.rows(); ++r) {
    write_row(out, joint, r);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_out(path);
  write_csv(out, data);
}

void write_pool_csv(std::ostream& out, const Matrix& rows, const std::vector<std::string>& names,
                    const SyntheticPool& pool) {
  if (static_cast<Eigen::Index>(names.size()) != rows.cols())
    throw Error(Errc::DimensionMismatch, "pool column names do not match its width");
  write_header(out, names);
  out << ",provenance,seed_index\n";
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    write_row(out, rows, r);
    out << ',' << provenance_name(pool.provenance[static_cast<std::size_t>(r)]) << ','
        << pool.seed_index[static_cast<std::size_t>(r)] << '\n';
  }
}

void write_pool_csv(const std::filesystem::path& path, const Matrix& rows,
                    const std::vector<std::string>& names, const SyntheticPool& pool) {
  auto out = open_out(path);
  write_pool_csv(out, rows, names, pool);
}

SyntheticPool read_pool_csv(const std::filesystem::path& path, const std::vector<std::string>& names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyData, "pool CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };
  const auto header = split(line);
  std::vector<int> col_of(names.size(), -1);
  int prov_col = -1, seed_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "provenance") prov_col = static_cast<int>(c);
    if (header[c] == "seed_index") seed_col = static_cast<int>(c);
    for (std::size_t k = 0; k < names.size(); ++k)
      if (header[c] == names[k]) col_of[k] = static_cast<int>(c);
  }
  for (std::size_t k = 0; k < names.size(); ++k)
    if (col_of[k] < 0) throw Error(Errc::MissingColumn, "pool CSV lacks column '" + names[k] + "'");

  std::vector<double> values;
  SyntheticPool pool;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto f = split(line);
    if (f.size() != header.size())
      throw Error(Errc::ParseError, "pool row " + std::to_string(row) + " has the wrong field count");
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& cell = f[static_cast<std::size_t>(col_of[k])];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw Error(Errc::ParseError, "pool row " + std::to_string(row) + ", column '" + names[k] +
                                          "': cannot parse '" + cell + "'");
      values.push_back(v);
    }
    pool.provenance.push_back(prov_col >= 0 ? parse_provenance(f[static_cast<std::size_t>(prov_col)])
                                            : Provenance::Interpolated);
    pool.seed_index.push_back(seed_col >= 0 ? std::stoll(f[static_cast<std::size_t>(seed_col)]) : -1);
  }
  if (row == 0) throw Error(Errc::EmptyData, "pool CSV has no rows");
  pool.rows = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(row),
                                 static_cast<Eigen::Index>(names.size()));
  return pool;
}

void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "iteration,critic_loss,gen_loss,mmd2,gp\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out << i + 1 << ',' << format_number(h.critic_loss[i]) << ',' << format_number(h.generator_loss[i])
        << ',' << format_number(h.mmd2[i]) << ',' << format_number(h.gradient_penalty[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

Json mlp_to_json(const Mlp& net) {
  Json j;
  j["version"] = kCheckpointVersion;
  j["widths"] = net.widths;
  j["weights"] = Json::array();
  j["biases"] = Json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.weights[l];  // row-major storage
    j["weights"].push_back(std::vector<double>(w.data(), w.data() + w.size()));
    const auto& b = net.biases[l];
    j["biases"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  return j;
}

Mlp mlp_from_json(const Json& j) {
  try {
    if (j.at("version").get<std::string>() != kCheckpointVersion)
      throw Error(Errc::BadConfig, "unsupported checkpoint version");
    Mlp net;
    net.widths = j.at("widths").get<std::vector<int>>();
    if (net.widths.size() < 2) throw Error(Errc::BadWidths, "checkpoint needs at least two widths");
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() != net.widths.size() - 1 || bs.size() != net.widths.size() - 1)
      throw Error(Errc::ShapeMismatch, "checkpoint layer count does not match widths");
    for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
      auto w = ws[l].get<std::vector<double>>();
      auto b = bs[l].get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(net.widths[l + 1]) * static_cast<std::size_t>(net.widths[l]) ||
          b.size() != static_cast<std::size_t>(net.widths[l + 1]))
        throw Error(Errc::ShapeMismatch, "checkpoint layer " + std::to_string(l) + " has wrong size");
      net.weights.push_back(Eigen::Map<Matrix>(w.data(), net.widths[l + 1], net.widths[l]));
      net.biases.push_back(Eigen::Map<Vector>(b.data(), net.widths[l + 1]));
    }
    net.validate();
    return net;
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& net) {
  write_text(path, mlp_to_json(net).dump() + "\n");
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  try {
    return mlp_from_json(Json::parse(read_text(path)));
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Configs

void to_json(Json& j, const AdamConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

void from_json(const Json& j, AdamConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
}

void to_json(Json& j, const GanConfig& c) {
  j = {{"lambda_gp", c.lambda_gp},
       {"alpha", c.alpha},
       {"critic_steps_per_gen", c.critic_steps_per_gen},
       {"batch_size", c.batch_size},
       {"iterations", c.iterations},
       {"hidden", c.hidden},
       {"critic_optimizer", c.critic_optimizer},
       {"generator_optimizer", c.generator_optimizer}};
  if (c.bandwidth.mode == BandwidthMode::MedianHeuristic)
    j["bandwidth"] = {{"mode", "median"}};
  else
    j["bandwidth"] = {{"mode", "fixed"}, {"sigma", c.bandwidth.sigma}};
}

void from_json(const Json& j, GanConfig& c) {
  c.lambda_gp = j.value("lambda_gp", c.lambda_gp);
  c.alpha = j.value("alpha", c.alpha);
  c.critic_steps_per_gen = j.value("critic_steps_per_gen", c.critic_steps_per_gen);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.iterations = j.value("iterations", c.iterations);
  c.hidden = j.value("hidden", c.hidden);
  if (j.contains("critic_optimizer")) from_json(j.at("critic_optimizer"), c.critic_optimizer);
  if (j.contains("generator_optimizer")) from_json(j.at("generator_optimizer"), c.generator_optimizer);
  if (j.contains("bandwidth")) {
    const auto& b = j.at("bandwidth");
    const auto mode = b.value("mode", std::string("median"));
    if (mode == "median") {
      c.bandwidth.mode = BandwidthMode::MedianHeuristic;
    } else if (mode == "fixed") {
      c.bandwidth.mode = BandwidthMode::Fixed;
      c.bandwidth.sigma = b.value("sigma", c.bandwidth.sigma);
    } else {
      throw Error(Errc::BadConfig, "bandwidth mode must be 'median' or 'fixed'");
    }
  }
}

void to_json(Json& j, const SmognParams& p) {
  j = {{"k", p.k}, {"per_seed", p.per_seed}, {"t_r", p.t_r}, {"jitter_cap", p.jitter_cap}};
}

void from_json(const Json& j, SmognParams& p) {
  p.k = j.value("k", p.k);
  p.per_seed = j.value("per_seed", p.per_seed);
  p.t_r = j.value("t_r", p.t_r);
  p.jitter_cap = j.value("jitter_cap", p.jitter_cap);
}

void to_json(Json& j, const ExperimentConfig& c) {
  j = {{"schema", kConfigSchemaVersion},
       {"experiment",
        {{"mode", std::string(mode_name(c.mode))},
         {"n_splits", c.n_splits},
         {"test_fraction", c.test_fraction},
         {"t_r", c.t_r},
         {"knn_k", c.knn_k},
         {"master_seed", c.master_seed}}},
       {"smogn", c.smogn},
       {"gan", c.gan}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (j.contains("schema") && j.at("schema").get<int>() != kConfigSchemaVersion)
    throw Error(Errc::BadConfig, "unsupported config schema " + j.at("schema").dump());
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    if (e.contains("mode")) c.mode = parse_mode(e.at("mode").get<std::string>());
    c.n_splits = e.value("n_splits", c.n_splits);
    c.test_fraction = e.value("test_fraction", c.test_fraction);
    c.t_r = e.value("t_r", c.t_r);
    c.knn_k = e.value("knn_k", c.knn_k);
    c.master_seed = e.value("master_seed", c.master_seed);
  }
  if (j.contains("smogn")) from_json(j.at("smogn"), c.smogn);
  if (j.contains("gan")) from_json(j.at("gan"), c.gan);
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  try {
    from_json(Json::parse(read_text(path)), base);
  } catch (const Json::exception& e) {
    throw Error(Errc::BadConfig, "config '" + path.string() + "': " + e.what());
  }
  return base;
}

// ---------------------------------------------------------------------------
// Reports

Json report_to_json(const ExperimentReport& rep, bool include_timings) {
  Json j;
  j["software"] = {{"name", "smogan"}, {"version", kVersion}, {"config_schema", kConfigSchemaVersion}};
  j["config"] = rep.config;
  j["config"]["experiment"].erase("mode");
  j["modes"] = Json::array();
  for (Mode m : rep.modes) j["modes"].push_back(std::string(mode_name(m)));

  Json splits = Json::array();
  for (std::size_t m = 0; m < rep.modes.size(); ++m)
    for (const auto& r : rep.results[m]) {
      Json row = {{"mode", std::string(mode_name(r.mode))},
                  {"split", r.split_index},
                  {"rmse", r.rmse},
                  {"sera", r.sera},
                  {"precision", r.precision},
                  {"recall", r.recall},
                  {"f1", r.f1},
                  {"train_size", r.train_size},
                  {"train_pool_size", r.train_pool_size},
                  {"rare_count", r.rare_count},
                  {"empty_region", r.empty_region},
                  {"degraded", r.degraded}};
      if (!r.warning.empty()) row["warning"] = r.warning;
      if (include_timings) row["seconds"] = r.seconds;
      splits.push_back(row);
    }
  j["splits"] = splits;

  Json comps = Json::array();
  for (const auto& c : rep.comparisons) {
    Json jc = {{"method_a", std::string(mode_name(c.method_a))},
               {"method_b", std::string(mode_name(c.method_b))}};
    for (const auto& mc : c.metrics)
      jc["metrics"][std::string(metric_name(mc.metric))] = {{"wins_a", mc.wins_a},
                                                            {"wins_b", mc.wins_b},
                                                            {"ties", mc.ties},
                                                            {"wilcoxon_p", mc.p_value},
                                                            {"significant", mc.significant},
                                                            {"lower_is_better", lower_is_better(mc.metric)}};
    comps.push_back(jc);
  }
  j["comparisons"] = comps;
  j["alpha"] = kSignificanceLevel;
  if (include_timings) {
    for (std::size_t m = 0; m < rep.modes.size(); ++m)
      j["timings"][std::string(mode_name(rep.modes[m]))] = rep.mode_seconds[m];
  }
  return j;
}

void write_report_csv(std::ostream& out, const ExperimentReport& rep) {
  out << "split,mode,metric,value\n";
  for (std::size_t m = 0; m < rep.modes.size(); ++m)
    for (const auto& r : rep.results[m])
      for (Metric k : kAllMetrics)
        out << r.split_index << ',' << mode_name(r.mode) << ',' << metric_name(k) << ','
            << format_number(metric_value(r, k)) << '\n';
}

Json diagnostic_to_json(const DiagnosticReport& d) {
  Json j;
  j["frobenius_real_vs_pool"] = d.frobenius_real_vs_pool;
  j["moment_gaps"] = {{"mean", d.moment_gaps[0]},
                      {"std", d.moment_gaps[1]},
                      {"skewness", d.moment_gaps[2]},
                      {"kurtosis", d.moment_gaps[3]}};
  Json comps = Json::array();
  for (Eigen::Index k = 0; k < d.pca_components.rows(); ++k) {
    const Vector row = d.pca_components.row(k).transpose();
    comps.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["pca_components"] = comps;
  j["explained_variance_ratios"] = std::vector<double>(
      d.explained_variance_ratios.data(), d.explained_variance_ratios.data() + d.explained_variance_ratios.size());
  return j;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(Errc::Io, "failed writing '" + path.string() + "'");
}

}  // namespace smogan
