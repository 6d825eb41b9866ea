#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "smogan/coredata.hpp"
#include "smogan/relevance.hpp"
#include "smogan/rng.hpp"

namespace smogan {

enum class Provenance : std::uint8_t { Interpolated, Jittered, Refined, NoiseSeeded };

std::string_view provenance_name(Provenance p) noexcept;
Provenance parse_provenance(std::string_view name);

struct SmognParams {
  int k = 5;
  int per_seed = 0;  // 0 = pick with balance_per_seed()
  double t_r = kDefaultRareThreshold;
  double jitter_cap = 0.02;
};

/// What happened when a synthetic row was drawn. Kept for every Stage-1 row
/// so the branch rule can be audited after the fact.
struct DrawRecord {
  Eigen::Index neighbour = -1;  // row index in the rare set
  double distance = 0.0;        // d_ij
  double d_star = 0.0;
  double u = 0.0;      // interpolation coefficient (Interpolated rows)
  double sigma = 0.0;  // jitter scale (Jittered rows)
};

/// Joint (features, target) rows with per-row provenance.
struct SyntheticPool {
  Matrix rows;
  std::vector<Provenance> provenance;
  std::vector<Eigen::Index> seed_index;  // -1 for noise seeds
  std::vector<DrawRecord> draws;         // empty unless produced by Stage 1

  Eigen::Index size() const noexcept { return rows.rows(); }
  void validate() const;
  void append(const SyntheticPool& other);
};

struct Neighbours {
  std::vector<Eigen::Index> indices;
  std::vector<double> distances;
};

/// k nearest rare rows to rare[seed] in feature space, excluding the seed.
/// Ties go to the lower row index.
Neighbours knn_rare(const Dataset& rare, Eigen::Index seed, int k);

SyntheticPool synthesize_from_seed(const Dataset& rare, Eigen::Index seed,
                                   const SmognParams& params, RngStream rng);

/// Smallest N with |rare| + N|rare| >= |normal|, clamped to [1, 10].
int balance_per_seed(Eigen::Index rare_count, Eigen::Index normal_count);

/// Stage-1 pool over every rare row of `train` (scaled units). `fn` must be
/// fitted in the same units as train.target. seed_index and the draw
/// records' neighbour refer to rows of `train`; k is clamped to |rare| - 1.
SyntheticPool oversample(const Dataset& train, const RelevanceFn& fn, const SmognParams& params,
                         RngStream rng);

}  // namespace smogan
