#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "smogan/coredata.hpp"
#include "smogan/error.hpp"
#include "smogan/nnengine.hpp"
#include "smogan/rng.hpp"
#include "smogan/smogn.hpp"

namespace smogan {

enum class BandwidthMode { MedianHeuristic, Fixed };

struct Bandwidth {
  BandwidthMode mode = BandwidthMode::MedianHeuristic;
  double sigma = 1.0;  // used when mode == Fixed
};

struct GanConfig {
  double lambda_gp = 10.0;
  double alpha = 1.0;
  int critic_steps_per_gen = 5;
  int batch_size = 64;
  int iterations = 2000;
  AdamConfig critic_optimizer{};
  AdamConfig generator_optimizer{};
  Bandwidth bandwidth{};
  std::vector<int> hidden{128, 256, 128};

  void validate() const;
};

struct TrainHistory {
  std::vector<double> critic_loss;
  std::vector<double> generator_loss;
  std::vector<double> mmd2;
  std::vector<double> gradient_penalty;

  std::size_t size() const noexcept { return generator_loss.size(); }
};

/// Thrown when a loss turns non-finite; carries what was recorded so far.
class DivergedTraining : public Error {
 public:
  DivergedTraining(const std::string& what, TrainHistory history)
      : Error(Errc::DivergedTraining, what), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

// ---- kernel two-sample statistic -------------------------------------------

/// Which pair distance(s) the median picked; weight is 1 or 1/2.
struct MedianSelection {
  double sigma = 1.0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  double weight = 0.0;
  bool degenerate = false;  // no positive distance, sigma fell back to 1
};

MedianSelection median_bandwidth_selection(const Matrix& batch);

/// Median of the strictly positive pairwise distances between rows; 1 when
/// every distance is zero.
double median_bandwidth(const Matrix& batch);

double gaussian_kernel(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                       double sigma);

/// Unbiased MMD^2 estimate with a Gaussian kernel. May be negative.
double mmd2_unbiased(const Matrix& x, const Matrix& y, double sigma);

struct Mmd2Gradient {
  double value = 0.0;
  Matrix d_x;            // d value / d x
  double d_sigma = 0.0;  // d value / d sigma
};

Mmd2Gradient mmd2_unbiased_gradient(const Matrix& x, const Matrix& y, double sigma);

// ---- losses ------------------------------------------------------------------

/// u = eps * real + (1 - eps) * fake with one eps ~ U(0,1) per row.
Matrix penalty_interpolates(const Matrix& real_batch, const Matrix& fake_batch, RngStream& rng);

double gradient_penalty(const Mlp& critic, const Matrix& real_batch, const Matrix& fake_batch,
                        RngStream& rng);

struct CriticLossTerms {
  double wasserstein = 0.0;  // mean D(G(x)) - mean D(z)
  double penalty = 0.0;
  double total = 0.0;
};

struct GeneratorLossTerms {
  double adversarial = 0.0;  // -mean D(G(x))
  double mmd2 = 0.0;
  double sigma = 0.0;
  double total = 0.0;
};

CriticLossTerms critic_loss_terms(const Mlp& critic, const Mlp& generator, const Matrix& real_batch,
                                  const Matrix& seed_batch, const GanConfig& config,
                                  RngStream& rng);
double critic_loss(const Mlp& critic, const Mlp& generator, const Matrix& real_batch,
                   const Matrix& seed_batch, const GanConfig& config, RngStream& rng);

GeneratorLossTerms generator_loss_terms(const Mlp& critic, const Mlp& generator,
                                        const Matrix& seed_batch, const Matrix& real_batch,
                                        const GanConfig& config);
double generator_loss(const Mlp& critic, const Mlp& generator, const Matrix& seed_batch,
                      const Matrix& real_batch, const GanConfig& config);

enum class LossSpec { CriticLoss, GeneratorLoss };

LossSpec parse_loss_spec(std::string_view name);

template <class Terms>
struct LossWithGradient {
  Terms terms;
  MlpGradient grad;
};

/// Critic loss and its gradient with respect to the critic parameters.
LossWithGradient<CriticLossTerms> critic_loss_gradient(const Mlp& critic, const Mlp& generator,
                                                       const Matrix& real_batch,
                                                       const Matrix& seed_batch,
                                                       const GanConfig& config, RngStream& rng);

/// Generator loss and its gradient with respect to the generator parameters,
/// including the dependence of a median bandwidth on the generated rows.
LossWithGradient<GeneratorLossTerms> generator_loss_gradient(const Mlp& critic,
                                                             const Mlp& generator,
                                                             const Matrix& seed_batch,
                                                             const Matrix& real_batch,
                                                             const GanConfig& config);

/// Gradient of the named loss with respect to the network it trains
/// (critic for CriticLoss, generator for GeneratorLoss).
MlpGradient loss_param_gradients(LossSpec spec, const Mlp& critic, const Mlp& generator,
                                 const Matrix& real_batch, const Matrix& seed_batch,
                                 const GanConfig& config, RngStream rng);

// ---- training ----------------------------------------------------------------

struct GanModels {
  Mlp generator;
  Mlp critic;
  TrainHistory history;
};

/// Trains on joint rows (scaled units). The critic only ever sees real_rare
/// rows as real data; both batches are drawn with replacement.
GanModels train(const Matrix& real_rare, const SyntheticPool& seed_pool, const GanConfig& config,
                RngStream rng);
GanModels train(const Dataset& real_rare, const SyntheticPool& seed_pool, const GanConfig& config,
                RngStream rng);

/// Same loop, starting from the given networks.
GanModels train_from(Mlp generator, Mlp critic, const Matrix& real_rare,
                     const SyntheticPool& seed_pool, const GanConfig& config, RngStream rng);

/// G applied to every seed row; provenance becomes Refined, order and
/// seed_index are kept.
SyntheticPool refine(const Mlp& generator, const SyntheticPool& seed_pool);

/// Pool of standard-normal seeds (GAN-only ablation).
SyntheticPool noise_pool(Eigen::Index rows, Eigen::Index dim, RngStream rng);

}  // namespace smogan
