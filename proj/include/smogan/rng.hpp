#pragma once

#include <cstdint>
#include <random>

namespace smogan {

/// Seeded random stream. Two streams built from the same (seed, stream_id)
/// produce the same draws; child() derives a named sub-stream without
/// consuming draws from the parent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  RngStream child(std::uint64_t id) const;

  double uniform();                  // [0, 1)
  double normal();                   // N(0, 1)
  std::size_t index(std::size_t n);  // uniform in [0, n)

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace smogan
