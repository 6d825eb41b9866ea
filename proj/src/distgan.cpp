#include "smogan/distgan.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace smogan {

void GanConfig::validate() const {
  if (!(lambda_gp >= 0.0)) throw Error(Errc::BadConfig, "lambda_gp must be >= 0");
  if (!(alpha >= 0.0)) throw Error(Errc::BadConfig, "alpha must be >= 0");
  if (iterations < 1) throw Error(Errc::BadConfig, "iterations must be >= 1");
  if (batch_size < 2) throw Error(Errc::BadConfig, "batch_size must be >= 2");
  if (critic_steps_per_gen < 1) throw Error(Errc::BadConfig, "critic_steps_per_gen must be >= 1");
  if (bandwidth.mode == BandwidthMode::Fixed && !(bandwidth.sigma > 0.0))
    throw Error(Errc::BadBandwidth, "fixed bandwidth must be positive");
  for (int h : hidden)
    if (h < 1) throw Error(Errc::BadWidths, "hidden widths must be positive");
  for (const auto* o : {&critic_optimizer, &generator_optimizer})
    if (!(o->learning_rate > 0.0) || o->beta1 < 0.0 || o->beta1 >= 1.0 || o->beta2 < 0.0 ||
        o->beta2 >= 1.0 || !(o->epsilon > 0.0))
      throw Error(Errc::BadConfig, "invalid Adam settings");
}

// ---------------------------------------------------------------------------
// Bandwidth and MMD

MedianSelection median_bandwidth_selection(const Matrix& batch) {
  const auto n = batch.rows();
  if (n < 2) throw Error(Errc::TooFewRows, "median bandwidth needs at least 2 rows");
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (batch.row(i) - batch.row(j)).norm();
      if (dist > 0.0) d.emplace_back(dist, i, j);
    }

  MedianSelection sel;
  if (d.empty()) {
    sel.degenerate = true;
    return sel;
  }
  const auto m = d.size();
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (m % 2 == 1) {
    sel.sigma = std::get<0>(*mid);
    sel.pairs = {{std::get<1>(*mid), std::get<2>(*mid)}};
    sel.weight = 1.0;
  } else {
    const auto lower = std::max_element(d.begin(), mid);
    sel.sigma = 0.5 * (std::get<0>(*lower) + std::get<0>(*mid));
    sel.pairs = {{std::get<1>(*lower), std::get<2>(*lower)}, {std::get<1>(*mid), std::get<2>(*mid)}};
    sel.weight = 0.5;
  }
  return sel;
}

double median_bandwidth(const Matrix& batch) { return median_bandwidth_selection(batch).sigma; }

double gaussian_kernel(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                       double sigma) {
  return std::exp(-(u - v).squaredNorm() / (2.0 * sigma * sigma));
}

namespace {

void check_mmd_args(const Matrix& x, const Matrix& y, double sigma) {
  if (x.rows() < 2 || y.rows() < 2)
    throw Error(Errc::BatchTooSmall, "MMD needs at least 2 rows in each sample");
  if (x.cols() != y.cols()) throw Error(Errc::ShapeMismatch, "MMD samples differ in dimension");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(Errc::BadBandwidth, "kernel bandwidth must be positive and finite");
}

double sqdist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace

double mmd2_unbiased(const Matrix& x, const Matrix& y, double sigma) {
  check_mmd_args(x, y, sigma);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const auto n = x.rows();
  const auto m = y.rows();
  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) kxx += std::exp(-sqdist(x, i, x, j) * inv);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) kyy += std::exp(-sqdist(y, i, y, j) * inv);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) kxy += std::exp(-sqdist(x, i, y, j) * inv);
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return 2.0 * kxx / (dn * (dn - 1.0)) + 2.0 * kyy / (dm * (dm - 1.0)) - 2.0 * kxy / (dn * dm);
}

Mmd2Gradient mmd2_unbiased_gradient(const Matrix& x, const Matrix& y, double sigma) {
  check_mmd_args(x, y, sigma);
  const auto n = x.rows();
  const auto m = y.rows();
  const double s2 = sigma * sigma;
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  const double cxx = 2.0 / (dn * (dn - 1.0));  // each unordered pair counted twice
  const double cyy = 2.0 / (dm * (dm - 1.0));
  const double cxy = 2.0 / (dn * dm);

  Mmd2Gradient out;
  out.d_x = Matrix::Zero(n, x.cols());
  double value = 0.0, dsig = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto diff = (x.row(i) - x.row(j)).eval();
      const double q = diff.squaredNorm();
      const double k = std::exp(-q / (2.0 * s2));
      value += cxx * k;
      dsig += cxx * k * q / (s2 * sigma);
      out.d_x.row(i) -= cxx * k / s2 * diff;
      out.d_x.row(j) += cxx * k / s2 * diff;
    }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double q = sqdist(y, i, y, j);
      const double k = std::exp(-q / (2.0 * s2));
      value += cyy * k;
      dsig += cyy * k * q / (s2 * sigma);
    }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto diff = (x.row(i) - y.row(j)).eval();
      const double q = diff.squaredNorm();
      const double k = std::exp(-q / (2.0 * s2));
      value -= cxy * k;
      dsig -= cxy * k * q / (s2 * sigma);
      out.d_x.row(i) += cxy * k / s2 * diff;
    }
  out.value = value;
  out.d_sigma = dsig;
  return out;
}

// ---------------------------------------------------------------------------
// Losses

Matrix penalty_interpolates(const Matrix& real_batch, const Matrix& fake_batch, RngStream& rng) {
  if (real_batch.rows() != fake_batch.rows() || real_batch.cols() != fake_batch.cols())
    throw Error(Errc::ShapeMismatch, "real and fake batches must have the same shape");
  Matrix u(real_batch.rows(), real_batch.cols());
  for (Eigen::Index b = 0; b < u.rows(); ++b) {
    const double eps = rng.uniform();
    u.row(b) = eps * real_batch.row(b) + (1.0 - eps) * fake_batch.row(b);
  }
  return u;
}

double gradient_penalty(const Mlp& critic, const Matrix& real_batch, const Matrix& fake_batch,
                        RngStream& rng) {
  return gradient_norm_penalty(critic, penalty_interpolates(real_batch, fake_batch, rng), nullptr);
}

namespace {

void check_critic_batches(const Mlp& critic, const Mlp& generator, const Matrix& real_batch,
                          const Matrix& seed_batch) {
  if (critic.output_dim() != 1) throw Error(Errc::NonScalarOutput, "critic must be scalar-valued");
  if (generator.output_dim() != critic.input_dim() || real_batch.cols() != critic.input_dim() ||
      seed_batch.cols() != generator.input_dim())
    throw Error(Errc::ShapeMismatch, "generator, critic and batch dimensions disagree");
  if (real_batch.rows() != seed_batch.rows() || real_batch.rows() < 1)
    throw Error(Errc::ShapeMismatch, "real and seed batches must have the same row count");
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix s(a.rows() + b.rows(), a.cols());
  s << a, b;
  return s;
}

}  // namespace

CriticLossTerms critic_loss_terms(const Mlp& critic, const Mlp& generator, const Matrix& real_batch,
                                  const Matrix& seed_batch, const GanConfig& config,
                                  RngStream& rng) {
  check_critic_batches(critic, generator, real_batch, seed_batch);
  const Matrix fake = forward(generator, seed_batch);
  CriticLossTerms t;
  t.wasserstein = forward(critic, fake).mean() - forward(critic, real_batch).mean();
  t.penalty = gradient_penalty(critic, real_batch, fake, rng);
  t.total = t.wasserstein + config.lambda_gp * t.penalty;
  return t;
}

double critic_loss(const Mlp& critic, const Mlp& generator, const Matrix& real_batch,
                   const Matrix& seed_batch, const GanConfig& config, RngStream& rng) {
  return critic_loss_terms(critic, generator, real_batch, seed_batch, config, rng).total;
}

namespace {

double bandwidth_for(const GanConfig& config, const Matrix& combined, MedianSelection* sel) {
  if (config.bandwidth.mode == BandwidthMode::Fixed) {
    if (!(config.bandwidth.sigma > 0.0)) throw Error(Errc::BadBandwidth, "fixed bandwidth must be positive");
    return config.bandwidth.sigma;
  }
  MedianSelection s = median_bandwidth_selection(combined);
  const double sigma = s.sigma;
  if (sel) *sel = std::move(s);
  return sigma;
}

void check_generator_batches(const Mlp& critic, const Mlp& generator, const Matrix& seed_batch,
                             const Matrix& real_batch) {
  if (critic.output_dim() != 1) throw Error(Errc::NonScalarOutput, "critic must be scalar-valued");
  if (seed_batch.rows() < 2 || real_batch.rows() < 2)
    throw Error(Errc::BatchTooSmall, "generator loss needs at least 2 rows per batch");
  if (generator.output_dim() != critic.input_dim() || real_batch.cols() != critic.input_dim() ||
      seed_batch.cols() != generator.input_dim())
    throw Error(Errc::ShapeMismatch, "generator, critic and batch dimensions disagree");
}

}  // namespace

GeneratorLossTerms generator_loss_terms(const Mlp& critic, const Mlp& generator,
                                        const Matrix& seed_batch, const Matrix& real_batch,
                                        const GanConfig& config) {
  check_generator_batches(critic, generator, seed_batch, real_batch);
  const Matrix fake = forward(generator, seed_batch);
  GeneratorLossTerms t;
  t.adversarial = -forward(critic, fake).mean();
  t.sigma = bandwidth_for(config, stack(fake, real_batch), nullptr);
  t.mmd2 = mmd2_unbiased(fake, real_batch, t.sigma);
  t.total = t.adversarial + config.alpha * t.mmd2;
  return t;
}

double generator_loss(const Mlp& critic, const Mlp& generator, const Matrix& seed_batch,
                      const Matrix& real_batch, const GanConfig& config) {
  return generator_loss_terms(critic, generator, seed_batch, real_batch, config).total;
}

LossSpec parse_loss_spec(std::string_view name) {
  if (name == "critic_loss") return LossSpec::CriticLoss;
  if (name == "generator_loss") return LossSpec::GeneratorLoss;
  throw Error(Errc::UnknownLossSpec, "unknown loss '" + std::string(name) + "'");
}

LossWithGradient<CriticLossTerms> critic_loss_gradient(const Mlp& critic, const Mlp& generator,
                                                       const Matrix& real_batch,
                                                       const Matrix& seed_batch,
                                                       const GanConfig& config, RngStream& rng) {
  check_critic_batches(critic, generator, real_batch, seed_batch);
  const auto B = real_batch.rows();
  const Matrix fake = forward(generator, seed_batch);

  LossWithGradient<CriticLossTerms> out;
  out.grad = MlpGradient::zeros_like(critic);

  // Fake rows first, then real rows, in one pass.
  const ForwardTrace trace = forward_trace(critic, stack(fake, real_batch));
  const auto& scores = trace.output();
  out.terms.wasserstein = scores.topRows(B).mean() - scores.bottomRows(B).mean();
  Matrix upstream(2 * B, 1);
  upstream.topRows(B).setConstant(1.0 / static_cast<double>(B));
  upstream.bottomRows(B).setConstant(-1.0 / static_cast<double>(B));
  backward(critic, trace, upstream, &out.grad);

  const Matrix u = penalty_interpolates(real_batch, fake, rng);
  out.terms.penalty = gradient_norm_penalty(critic, u, config.lambda_gp != 0.0 ? &out.grad : nullptr,
                                            config.lambda_gp);
  out.terms.total = out.terms.wasserstein + config.lambda_gp * out.terms.penalty;
  return out;
}

LossWithGradient<GeneratorLossTerms> generator_loss_gradient(const Mlp& critic,
                                                             const Mlp& generator,
                                                             const Matrix& seed_batch,
                                                             const Matrix& real_batch,
                                                             const GanConfig& config) {
  check_generator_batches(critic, generator, seed_batch, real_batch);
  const auto N = seed_batch.rows();
  const ForwardTrace g_trace = forward_trace(generator, seed_batch);
  const Matrix& fake = g_trace.output();

  LossWithGradient<GeneratorLossTerms> out;
  out.grad = MlpGradient::zeros_like(generator);

  const ForwardTrace d_trace = forward_trace(critic, fake);
  out.terms.adversarial = -d_trace.output().mean();
  Matrix d_fake = backward(critic, d_trace, Matrix::Constant(N, 1, -1.0 / static_cast<double>(N)),
                           nullptr);

  MedianSelection sel;
  const Matrix combined = stack(fake, real_batch);
  out.terms.sigma = bandwidth_for(config, combined, &sel);
  const Mmd2Gradient mmd = mmd2_unbiased_gradient(fake, real_batch, out.terms.sigma);
  out.terms.mmd2 = mmd.value;
  out.terms.total = out.terms.adversarial + config.alpha * out.terms.mmd2;

  if (config.alpha != 0.0) {
    d_fake += config.alpha * mmd.d_x;
    // sigma is a (piecewise) function of the generated rows as well.
    if (config.bandwidth.mode == BandwidthMode::MedianHeuristic && !sel.degenerate) {
      const double c = config.alpha * mmd.d_sigma * sel.weight;
      for (const auto& [i, j] : sel.pairs) {
        const auto diff = (combined.row(i) - combined.row(j)).eval();
        const auto dsig = (c / diff.norm() * diff).eval();
        if (i < N) d_fake.row(i) += dsig;
        if (j < N) d_fake.row(j) -= dsig;
      }
    }
  }
  backward(generator, g_trace, d_fake, &out.grad);
  return out;
}

MlpGradient loss_param_gradients(LossSpec spec, const Mlp& critic, const Mlp& generator,
                                 const Matrix& real_batch, const Matrix& seed_batch,
                                 const GanConfig& config, RngStream rng) {
  switch (spec) {
    case LossSpec::CriticLoss:
      return critic_loss_gradient(critic, generator, real_batch, seed_batch, config, rng).grad;
    case LossSpec::GeneratorLoss:
      return generator_loss_gradient(critic, generator, seed_batch, real_batch, config).grad;
  }
  throw Error(Errc::UnknownLossSpec, "unknown loss specification");
}

// ---------------------------------------------------------------------------
// Training

namespace {

Matrix sample_rows(const Matrix& src, Eigen::Index count, RngStream& rng) {
  Matrix out(count, src.cols());
  const auto n = static_cast<std::size_t>(src.rows());
  for (Eigen::Index r = 0; r < count; ++r)
    out.row(r) = src.row(static_cast<Eigen::Index>(rng.index(n)));
  return out;
}

}  // namespace

GanModels train_from(Mlp generator, Mlp critic, const Matrix& real_rare,
                     const SyntheticPool& seed_pool, const GanConfig& config, RngStream rng) {
  config.validate();
  if (real_rare.rows() < 2) throw Error(Errc::InsufficientData, "need at least 2 real rare rows");
  if (seed_pool.size() < 2) throw Error(Errc::InsufficientData, "need at least 2 seed rows");
  const auto d = real_rare.cols();
  if (seed_pool.rows.cols() != d || generator.input_dim() != d || generator.output_dim() != d ||
      critic.input_dim() != d)
    throw Error(Errc::ShapeMismatch, "joint dimension disagrees between data and networks");

  // Batches are drawn with replacement, so they may exceed the real set; they
  // shrink only when both sources are smaller than the configured size.
  const Eigen::Index batch =
      std::max<Eigen::Index>(2, std::min<Eigen::Index>(config.batch_size,
                                                       std::max(real_rare.rows(), seed_pool.size())));

  AdamState critic_opt = make_adam(critic, config.critic_optimizer);
  AdamState gen_opt = make_adam(generator, config.generator_optimizer);
  RngStream draw = rng.child(3);

  GanModels out;
  auto diverged = [&](const std::string& what) {
    return DivergedTraining(what + " at iteration " + std::to_string(out.history.size() + 1),
                            out.history);
  };

  for (int it = 0; it < config.iterations; ++it) {
    CriticLossTerms last{};
    for (int c = 0; c < config.critic_steps_per_gen; ++c) {
      const Matrix real = sample_rows(real_rare, batch, draw);
      const Matrix seeds = sample_rows(seed_pool.rows, batch, draw);
      auto step = critic_loss_gradient(critic, generator, real, seeds, config, draw);
      if (!std::isfinite(step.terms.total) || !step.grad.all_finite()) throw diverged("critic loss");
      adam_step(critic_opt, critic, step.grad);
      last = step.terms;
    }
    const Matrix seeds = sample_rows(seed_pool.rows, batch, draw);
    const Matrix real = sample_rows(real_rare, batch, draw);
    auto step = generator_loss_gradient(critic, generator, seeds, real, config);
    if (!std::isfinite(step.terms.total) || !step.grad.all_finite()) throw diverged("generator loss");
    adam_step(gen_opt, generator, step.grad);

    out.history.critic_loss.push_back(last.total);
    out.history.gradient_penalty.push_back(last.penalty);
    out.history.generator_loss.push_back(step.terms.total);
    out.history.mmd2.push_back(step.terms.mmd2);
  }
  out.generator = std::move(generator);
  out.critic = std::move(critic);
  return out;
}

GanModels train(const Matrix& real_rare, const SyntheticPool& seed_pool, const GanConfig& config,
                RngStream rng) {
  config.validate();
  const auto d = static_cast<int>(real_rare.cols());
  Mlp generator = init_mlp(gan_widths(d, d, config.hidden), rng.child(1));
  Mlp critic = init_mlp(gan_widths(d, 1, config.hidden), rng.child(2));
  return train_from(std::move(generator), std::move(critic), real_rare, seed_pool, config, rng);
}

GanModels train(const Dataset& real_rare, const SyntheticPool& seed_pool, const GanConfig& config,
                RngStream rng) {
  return train(real_rare.joint(), seed_pool, config, rng);
}

SyntheticPool refine(const Mlp& generator, const SyntheticPool& seed_pool) {
  if (seed_pool.rows.cols() != generator.input_dim())
    throw Error(Errc::ShapeMismatch, "seed dimension differs from generator input");
  SyntheticPool out;
  out.rows = forward(generator, seed_pool.rows);
  out.provenance.assign(static_cast<std::size_t>(out.rows.rows()), Provenance::Refined);
  out.seed_index = seed_pool.seed_index;
  return out;
}

SyntheticPool noise_pool(Eigen::Index rows, Eigen::Index dim, RngStream rng) {
  SyntheticPool p;
  p.rows.resize(rows, dim);
  for (Eigen::Index i = 0; i < p.rows.size(); ++i) p.rows.data()[i] = rng.normal();
  p.provenance.assign(static_cast<std::size_t>(rows), Provenance::NoiseSeeded);
  p.seed_index.assign(static_cast<std::size_t>(rows), -1);
  return p;
}

}  // namespace smogan
