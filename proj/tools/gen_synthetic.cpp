// Writes the seeded synthetic benchmark dataset as CSV.
#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "smogan/error.hpp"
#include "smogan/harness.hpp"
#include "smogan/serialization.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic imbalanced-regression data", "gen_synthetic"};
  long rows = 600;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--rows", rows, "row count (default 600)");
  app.add_option("--seed", seed, "seed");
  app.add_option("--out", out, "output CSV")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    smogan::write_csv(out, smogan::synthetic_benchmark(rows, smogan::RngStream(seed, 7)));
  } catch (const smogan::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
