#include "smogan/smogn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smogan/error.hpp"

namespace smogan {

std::string_view provenance_name(Provenance p) noexcept {
  switch (p) {
    case Provenance::Interpolated: return "interpolated";
    case Provenance::Jittered: return "jittered";
    case Provenance::Refined: return "refined";
    case Provenance::NoiseSeeded: return "noise";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view name) {
  for (auto p : {Provenance::Interpolated, Provenance::Jittered, Provenance::Refined,
                 Provenance::NoiseSeeded})
    if (provenance_name(p) == name) return p;
  throw Error(Errc::ParseError, "unknown provenance '" + std::string(name) + "'");
}

void SyntheticPool::validate() const {
  if (static_cast<Eigen::Index>(provenance.size()) != rows.rows() ||
      static_cast<Eigen::Index>(seed_index.size()) != rows.rows())
    throw Error(Errc::DimensionMismatch, "pool metadata length differs from row count");
  if (!rows.allFinite()) throw Error(Errc::ParseError, "pool contains non-finite values");
}

void SyntheticPool::append(const SyntheticPool& other) {
  if (rows.size() == 0) {
    *this = other;
    return;
  }
  if (other.rows.cols() != rows.cols())
    throw Error(Errc::DimensionMismatch, "cannot append pools of different width");
  Matrix merged(rows.rows() + other.rows.rows(), rows.cols());
  merged << rows, other.rows;
  rows = std::move(merged);
  provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
  seed_index.insert(seed_index.end(), other.seed_index.begin(), other.seed_index.end());
  draws.insert(draws.end(), other.draws.begin(), other.draws.end());
}

Neighbours knn_rare(const Dataset& rare, Eigen::Index seed, int k) {
  const auto n = rare.rows();
  if (k < 1) throw Error(Errc::NotEnoughNeighbours, "k must be at least 1");
  if (n < 2 || k > n - 1)
    throw Error(Errc::NotEnoughNeighbours, "k = " + std::to_string(k) + " but only " +
                                               std::to_string(n - 1) + " other rare rows");
  if (seed < 0 || seed >= n) throw Error(Errc::ShapeMismatch, "seed index out of range");

  std::vector<std::pair<double, Eigen::Index>> cand;
  cand.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == seed) continue;
    cand.emplace_back((rare.features.row(j) - rare.features.row(seed)).norm(), j);
  }
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());

  Neighbours nb;
  for (int i = 0; i < k; ++i) {
    nb.distances.push_back(cand[static_cast<std::size_t>(i)].first);
    nb.indices.push_back(cand[static_cast<std::size_t>(i)].second);
  }
  return nb;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

SyntheticPool synthesize_from_seed(const Dataset& rare, Eigen::Index seed,
                                   const SmognParams& params, RngStream rng) {
  if (params.per_seed < 1) throw Error(Errc::BadConfig, "per_seed must be at least 1");
  const Neighbours nb = knn_rare(rare, seed, params.k);
  const double d_star = 0.5 * median_of(nb.distances);
  const double sigma = std::min(params.jitter_cap, d_star);

  const auto p = rare.feature_count();
  SyntheticPool pool;
  pool.rows.resize(params.per_seed, p + 1);
  Vector seed_row(p + 1);
  seed_row << rare.features.row(seed).transpose(), rare.target[seed];

  for (int r = 0; r < params.per_seed; ++r) {
    const auto pick = rng.index(nb.indices.size());
    DrawRecord rec;
    rec.neighbour = nb.indices[pick];
    rec.distance = nb.distances[pick];
    rec.d_star = d_star;

    if (rec.distance < d_star) {
      Vector nb_row(p + 1);
      nb_row << rare.features.row(rec.neighbour).transpose(), rare.target[rec.neighbour];
      rec.u = rng.uniform();
      pool.rows.row(r) = (seed_row + rec.u * (nb_row - seed_row)).transpose();
      pool.provenance.push_back(Provenance::Interpolated);
    } else {
      rec.sigma = sigma;
      for (Eigen::Index c = 0; c <= p; ++c) pool.rows(r, c) = seed_row[c] + sigma * rng.normal();
      pool.provenance.push_back(Provenance::Jittered);
    }
    pool.seed_index.push_back(seed);
    pool.draws.push_back(rec);
  }
  return pool;
}

int balance_per_seed(Eigen::Index rare_count, Eigen::Index normal_count) {
  if (rare_count < 1) return 1;
  const auto deficit = normal_count - rare_count;
  const auto n = deficit <= 0 ? 1 : (deficit + rare_count - 1) / rare_count;
  return static_cast<int>(std::clamp<Eigen::Index>(n, 1, 10));
}

SyntheticPool oversample(const Dataset& train, const RelevanceFn& fn, const SmognParams& params,
                         RngStream rng) {
  const RarePartition part = partition_rare(train, fn, params.t_r);
  const auto n_rare = part.rare.rows();
  if (n_rare < 2) throw Error(Errc::RareSetTooSmall, "a single rare row has no neighbours");

  SmognParams eff = params;
  eff.k = std::min<int>(params.k, static_cast<int>(n_rare - 1));
  if (eff.per_seed <= 0) eff.per_seed = balance_per_seed(n_rare, part.normal.rows());

  SyntheticPool pool;
  for (Eigen::Index s = 0; s < n_rare; ++s) {
    SyntheticPool one =
        synthesize_from_seed(part.rare, s, eff, rng.child(static_cast<std::uint64_t>(s)));
    // Report rows in the coordinates of `train`, not of the rare subset.
    for (auto& idx : one.seed_index) idx = part.rare_rows[static_cast<std::size_t>(idx)];
    for (auto& d : one.draws) d.neighbour = part.rare_rows[static_cast<std::size_t>(d.neighbour)];
    pool.append(one);
  }
  return pool;
}

}  // namespace smogan
