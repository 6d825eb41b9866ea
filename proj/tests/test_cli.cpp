#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "smogan/cli.hpp"
#include "smogan/error.hpp"
#include "smogan/serialization.hpp"

using namespace smogan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("smogan_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int cli(std::vector<std::string> args) { return run_cli(args); }

std::string data_file(const TempDir& dir, Eigen::Index n = 200, std::uint64_t seed = 3) {
  const std::string p = dir / "data.csv";
  write_csv(p, synthetic_benchmark(n, RngStream(seed, 7)));
  return p;
}

const std::vector<std::string> kFastGan{"--iterations", "3", "--batch-size", "16"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  RngStream rng(1, 0);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.index(200)) - 100);
    const std::string s = format_number(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("dataset csv round trip is exact") {
  TempDir dir;
  const Dataset d = synthetic_benchmark(50, RngStream(2, 7));
  write_csv(dir / "d.csv", d);
  const Dataset back = load_csv(dir / "d.csv", "y");
  CHECK(back.joint() == d.joint());
  CHECK(back.column_names == d.column_names);
}

TEST_CASE("pool csv round trip") {
  TempDir dir;
  SyntheticPool pool;
  RngStream rng(3, 0);
  pool.rows = Matrix(4, 3);
  for (Eigen::Index i = 0; i < pool.rows.size(); ++i) pool.rows.data()[i] = rng.normal();
  pool.provenance = {Provenance::Interpolated, Provenance::Jittered, Provenance::Refined, Provenance::NoiseSeeded};
  pool.seed_index = {3, 3, 7, -1};
  write_pool_csv(dir / "p.csv", pool.rows, {"a", "b", "y"}, pool);
  std::ifstream in(dir / "p.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "a,b,y,provenance,seed_index");
  const SyntheticPool back = read_pool_csv(dir / "p.csv", {"a", "b", "y"});
  CHECK(back.rows == pool.rows);
  CHECK(back.provenance == pool.provenance);
  CHECK(back.seed_index == pool.seed_index);
  CHECK_THROWS_AS(read_pool_csv(dir / "p.csv", {"a", "q", "y"}), Error);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  const Mlp net = init_mlp({3, 5, 2}, RngStream(4, 0));
  save_checkpoint(dir / "m.json", net);
  const Mlp back = load_checkpoint(dir / "m.json");
  CHECK(back.widths == net.widths);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    CHECK(back.weights[l] == net.weights[l]);
    CHECK(back.biases[l] == net.biases[l]);
  }
  Json j = mlp_to_json(net);
  CHECK(j["version"] == "mlp-v1");
  CHECK(j["weights"][0].size() == 15);
  CHECK(j["weights"][0][1] == net.weights[0](0, 1));  // row-major
  j["version"] = "mlp-v0";
  CHECK_THROWS_AS(mlp_from_json(j), Error);
  Json bad = mlp_to_json(net);
  bad["biases"][0].erase(0);
  CHECK_THROWS_AS(mlp_from_json(bad), Error);
}

TEST_CASE("config json round trip and overlay") {
  TempDir dir;
  ExperimentConfig c;
  c.mode = Mode::GanOnly;
  c.n_splits = 7;
  c.gan.iterations = 123;
  c.gan.bandwidth = {BandwidthMode::Fixed, 0.25};
  c.gan.critic_optimizer.learning_rate = 0.003;
  c.smogn.k = 3;
  c.master_seed = 99;
  Json j = c;
  ExperimentConfig back;
  from_json(j, back);
  CHECK(Json(back) == j);
  CHECK(back.gan.bandwidth.mode == BandwidthMode::Fixed);

  write_text(dir / "c.json", R"({"gan": {"iterations": 9}, "experiment": {"n_splits": 3}})");
  const ExperimentConfig o = load_config(dir / "c.json");
  CHECK(o.gan.iterations == 9);
  CHECK(o.n_splits == 3);
  CHECK(o.gan.batch_size == 64);
  write_text(dir / "bad.json", R"({"schema": 2})");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), Error);
  write_text(dir / "broken.json", "{");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), Error);
}

TEST_CASE("cli: version, usage errors, exit codes") {
  TempDir dir;
  const std::string data = data_file(dir);
  CHECK(cli({"--version"}) == 0);
  CHECK(cli({}) == 1);
  CHECK(cli({"frobnicate"}) == 1);
  CHECK(cli({"augment", "--input", data, "--out", dir / "a.csv"}) == 1);  // missing --target
  CHECK(cli({"augment", "--input", dir / "missing.csv", "--target", "y", "--out", dir / "a.csv"}) == 1);
  CHECK(cli({"augment", "--input", data, "--target", "y", "--out", dir / "nodir/a.csv"}) == 1);
  CHECK(cli({"augment", "--input", data, "--target", "y", "--out", data}) == 1);  // would overwrite input
  CHECK(cli({"augment", "--input", data, "--target", "nope", "--out", dir / "a.csv"}) == 2);
  CHECK(cli({"augment", "--input", data, "--target", "y", "--out", dir / "a.csv", "--mode", "bogus"}) == 1);
  CHECK(cli({"benchmark", "--out", dir / "r.json", "--modes", "baseline"}) == 1);
  CHECK_FALSE(fs::exists(dir / "a.csv"));
}

TEST_CASE("cli: oversample writes provenance columns in original units") {
  TempDir dir;
  const std::string data = data_file(dir);
  REQUIRE(cli({"oversample", "--input", data, "--target", "y", "--out", dir / "pool.csv", "--seed", "4"}) == 0);
  std::ifstream in(dir / "pool.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1,x2,x3,x4,y,provenance,seed_index");
  const SyntheticPool pool = read_pool_csv(dir / "pool.csv", {"x1", "x2", "x3", "x4", "y"});
  CHECK(pool.size() > 0);
  // Original units: interpolated targets stay inside the raw rare-target range.
  const Dataset d = load_csv(data, "y");
  const RarePartition part = partition_rare(d, fit_relevance(d.target), 0.8);
  const double lo = part.rare.target.minCoeff(), hi = part.rare.target.maxCoeff();
  int interpolated = 0;
  for (Eigen::Index i = 0; i < pool.size(); ++i) {
    if (pool.provenance[static_cast<std::size_t>(i)] != Provenance::Interpolated) continue;
    ++interpolated;
    CHECK(pool.rows(i, 4) >= lo - 1e-9);
    CHECK(pool.rows(i, 4) <= hi + 1e-9);
  }
  CHECK(interpolated > 0);
}

TEST_CASE("cli: augment is deterministic and leaves its input untouched") {
  TempDir dir;
  const std::string data = data_file(dir);
  const std::string before = read_text(data);
  const auto args = with({"augment", "--input", data, "--target", "y", "--seed", "42"}, kFastGan);
  REQUIRE(cli(with(args, {"--out", dir / "a1.csv"})) == 0);
  REQUIRE(cli(with(args, {"--out", dir / "a2.csv"})) == 0);
  CHECK(read_text(dir / "a1.csv") == read_text(dir / "a2.csv"));
  CHECK(read_text(data) == before);
  const Dataset aug = load_csv(dir / "a1.csv", "y");
  CHECK(aug.rows() > 200);
  REQUIRE(cli(with(with({"augment", "--input", data, "--target", "y", "--seed", "43"}, kFastGan),
                   {"--out", dir / "a3.csv"})) == 0);
  CHECK(read_text(dir / "a1.csv") != read_text(dir / "a3.csv"));
}

TEST_CASE("cli: flags override config values") {
  TempDir dir;
  const std::string data = data_file(dir);
  write_text(dir / "cfg.json", R"({"gan": {"iterations": 2, "hidden": [4, 4]}, "smogn": {"per_seed": 2}})");
  REQUIRE(cli({"oversample", "--input", data, "--target", "y", "--out", dir / "pool.csv"}) == 0);
  REQUIRE(cli({"refine", "--input", data, "--target", "y", "--pool", dir / "pool.csv", "--config", dir / "cfg.json",
               "--out", dir / "ref.csv", "--history", dir / "h.csv"}) == 0);
  std::ifstream h(dir / "h.csv");
  std::string line;
  int lines = 0;
  while (std::getline(h, line)) ++lines;
  CHECK(lines == 3);  // header + 2 iterations from the config file
  REQUIRE(cli({"refine", "--input", data, "--target", "y", "--pool", dir / "pool.csv", "--config", dir / "cfg.json",
               "--iterations", "5", "--out", dir / "ref.csv", "--history", dir / "h.csv",
               "--checkpoint-dir", dir.path.string()}) == 0);
  std::ifstream h2(dir / "h.csv");
  lines = 0;
  while (std::getline(h2, line)) ++lines;
  CHECK(lines == 6);
  const Mlp g = load_checkpoint(dir / "generator.json");
  CHECK(g.widths == std::vector<int>{5, 4, 4, 5});
  CHECK(load_checkpoint(dir / "critic.json").output_dim() == 1);
  const SyntheticPool ref = read_pool_csv(dir / "ref.csv", {"x1", "x2", "x3", "x4", "y"});
  for (auto p : ref.provenance) CHECK(p == Provenance::Refined);

  REQUIRE(cli({"augment", "--input", data, "--target", "y", "--config", dir / "cfg.json", "--out", dir / "a.csv",
               "--mode", "smogn"}) == 0);
  const Dataset a = load_csv(dir / "a.csv", "y");
  const Dataset d = load_csv(data, "y");
  const RelevanceFn fn = fit_relevance(d.target);
  CHECK(a.rows() == d.rows() + 2 * partition_rare(d, fn, 0.8).rare.rows());
}

TEST_CASE("cli: evaluate") {
  TempDir dir;
  write_text(dir / "pred.csv", "y,yhat\n1,1\n2,2\n3,3\n4,4\n30,30\n");
  REQUIRE(cli({"evaluate", "--predictions", dir / "pred.csv", "--out", dir / "m.json"}) == 0);
  const Json j = Json::parse(read_text(dir / "m.json"));
  CHECK(j["rmse"] == 0.0);
  CHECK(j["sera"] == 0.0);
  CHECK(j["precision"].get<double>() == doctest::Approx(1.0));
  CHECK(j["f1"].get<double>() == doctest::Approx(1.0));
  CHECK(cli({"evaluate", "--predictions", dir / "pred.csv", "--pred", "zz", "--out", dir / "m.json"}) == 2);
}

TEST_CASE("cli: benchmark report") {
  TempDir dir;
  const std::string data = data_file(dir, 150);
  const auto args = with({"benchmark", "--input", data, "--target", "y", "--modes", "baseline,smogn,smogan",
                          "--splits", "25", "--seed", "5", "--csv", dir / "r.csv"},
                         with(kFastGan, {"--out", dir / "r.json"}));
  REQUIRE(cli(args) == 0);
  const Json j = Json::parse(read_text(dir / "r.json"));
  CHECK(j["comparisons"].size() == 3);
  for (const auto& c : j["comparisons"])
    for (const auto& [name, m] : c["metrics"].items())
      CHECK(m["wins_a"].get<int>() + m["wins_b"].get<int>() + m["ties"].get<int>() == 25);
  CHECK(j["splits"].size() == 75);
  CHECK_FALSE(j["splits"][0].contains("seconds"));
  CHECK_FALSE(j.contains("timings"));
  CHECK(j["config"]["experiment"]["n_splits"] == 25);
  CHECK(j["software"]["version"] == kVersion);
  std::ifstream csv(dir / "r.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 1 + 25 * 3 * 5);

  REQUIRE(cli(with(args, {"--record-timings"})) == 0);
  CHECK(Json::parse(read_text(dir / "r.json")).contains("timings"));
}

TEST_CASE("cli: diagnose") {
  TempDir dir;
  const std::string data = data_file(dir, 300);
  REQUIRE(cli({"oversample", "--input", data, "--target", "y", "--out", dir / "pool.csv"}) == 0);
  REQUIRE(cli(with({"refine", "--input", data, "--target", "y", "--pool", dir / "pool.csv", "--out",
                    dir / "ref.csv"},
                   kFastGan)) == 0);
  REQUIRE(cli({"diagnose", "--input", data, "--target", "y", "--initial", dir / "pool.csv", "--refined",
               dir / "ref.csv", "--out", dir / "diag.json", "--pca-out", dir / "pca.csv"}) == 0);
  const Json j = Json::parse(read_text(dir / "diag.json"));
  CHECK(j.contains("initial"));
  CHECK(j.contains("refined"));
  CHECK(j["initial"]["moment_gaps"].size() == 4);
  std::ifstream pca(dir / "pca.csv");
  std::string header, line;
  std::getline(pca, header);
  CHECK(header == "source,pc1,pc2");
  std::set<std::string> labels;
  while (std::getline(pca, line)) labels.insert(line.substr(0, line.find(',')));
  CHECK(labels == std::set<std::string>{"real", "initial", "refined"});
  CHECK(cli({"diagnose", "--input", data, "--target", "y", "--out", dir / "diag.json"}) == 1);
}
