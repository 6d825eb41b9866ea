#pragma once
// Central finite-difference checks for the GAN loss gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "smogan/distgan.hpp"
#include "smogan/nnengine.hpp"

namespace gradcheck {

using namespace smogan;

struct Result {
  long checked = 0;
  long skipped = 0;  // perturbation crossed a ReLU kink or changed the median pair
  long failed = 0;
  double max_rel = 0.0;
};

inline double rel_error(double a, double f, double floor = 1e-6) {
  return std::abs(a - f) / std::max({std::abs(a), std::abs(f), floor});
}

/// Activation masks of every hidden layer, flattened.
inline std::vector<bool> masks(const Mlp& net, const Matrix& x) {
  const ForwardTrace t = forward_trace(net, x);
  std::vector<bool> m;
  for (std::size_t l = 0; l + 1 < t.preacts.size(); ++l)
    for (Eigen::Index i = 0; i < t.preacts[l].size(); ++i) m.push_back(t.preacts[l].data()[i] > 0.0);
  return m;
}

inline Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix s(a.rows() + b.rows(), a.cols());
  s << a, b;
  return s;
}

/// Everything the critic loss branches on: masks on [fake; real] and on the
/// penalty interpolates.
inline std::vector<bool> critic_pattern(const Mlp& critic, const Mlp& generator, const Matrix& real,
                                        const Matrix& seeds, RngStream rng) {
  const Matrix fake = forward(generator, seeds);
  auto m = masks(critic, stack(fake, real));
  const auto u = masks(critic, penalty_interpolates(real, fake, rng));
  m.insert(m.end(), u.begin(), u.end());
  return m;
}

inline std::vector<bool> generator_pattern(const Mlp& critic, const Mlp& generator, const Matrix& seeds,
                                           const Matrix& real) {
  auto m = masks(generator, seeds);
  const Matrix fake = forward(generator, seeds);
  const auto c = masks(critic, fake);
  m.insert(m.end(), c.begin(), c.end());
  const MedianSelection sel = median_bandwidth_selection(stack(fake, real));
  for (const auto& [i, j] : sel.pairs) {
    for (int b = 0; b < 32; ++b) m.push_back((i >> b) & 1);
    for (int b = 0; b < 32; ++b) m.push_back((j >> b) & 1);
  }
  return m;
}

/// Pointers to every parameter of a network in layer order.
inline std::vector<double*> parameters(Mlp& net) {
  std::vector<double*> p;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) p.push_back(net.weights[l].data() + i);
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) p.push_back(net.biases[l].data() + i);
  }
  return p;
}

inline std::vector<double> flatten(const MlpGradient& g) {
  std::vector<double> f;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    f.insert(f.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
    f.insert(f.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
  }
  return f;
}

/// Checks the chosen parameter indices (all when `which` is empty) of `net`,
/// where `loss` and `pattern` read `net` by reference.
template <class Loss, class Pattern>
Result check(Mlp& net, const std::vector<double>& analytic, Loss&& loss, Pattern&& pattern,
             const std::vector<std::size_t>& which, double h = 1e-4, double tol = 1e-4) {
  Result r;
  auto params = parameters(net);
  const auto base = pattern();
  std::vector<std::size_t> idx = which;
  if (idx.empty()) {
    idx.resize(params.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  for (std::size_t k : idx) {
    double* p = params[k];
    const double orig = *p;
    *p = orig + h;
    const double lp = loss();
    const bool same_p = pattern() == base;
    *p = orig - h;
    const double lm = loss();
    const bool same_m = pattern() == base;
    *p = orig;
    if (!same_p || !same_m) {
      ++r.skipped;
      continue;
    }
    const double fd = (lp - lm) / (2.0 * h);
    const double e = rel_error(analytic[k], fd);
    r.max_rel = std::max(r.max_rel, e);
    ++r.checked;
    if (e > tol) ++r.failed;
  }
  return r;
}

inline void randomize_biases(Mlp& net, RngStream rng, double scale = 0.1) {
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = scale * rng.normal();
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, RngStream& rng, double shift = 0.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
  return m;
}

struct Problem {
  Mlp critic, generator;
  Matrix real, seeds;
  GanConfig config;
  RngStream eps{0, 0};
};

/// Random parameterization with hidden widths `hidden`, joint dimension d.
inline Problem make_problem(std::uint64_t seed, int d, int batch, const std::vector<int>& hidden) {
  Problem p;
  p.config.hidden = hidden;
  p.config.lambda_gp = 10.0;
  p.config.alpha = 1.0;
  p.critic = init_mlp(gan_widths(d, 1, hidden), RngStream(seed, 1));
  p.generator = init_mlp(gan_widths(d, d, hidden), RngStream(seed, 2));
  randomize_biases(p.critic, RngStream(seed, 3));
  randomize_biases(p.generator, RngStream(seed, 4));
  RngStream data(seed, 5);
  p.real = random_matrix(batch, d, data, 0.5);
  p.seeds = random_matrix(batch, d, data);
  p.eps = RngStream(seed, 6);
  return p;
}

inline Result check_critic(Problem& p, const std::vector<std::size_t>& which = {}) {
  RngStream e = p.eps;
  const auto g = flatten(critic_loss_gradient(p.critic, p.generator, p.real, p.seeds, p.config, e).grad);
  auto loss = [&] {
    RngStream r = p.eps;
    return critic_loss(p.critic, p.generator, p.real, p.seeds, p.config, r);
  };
  auto pattern = [&] { return critic_pattern(p.critic, p.generator, p.real, p.seeds, p.eps); };
  return check(p.critic, g, loss, pattern, which);
}

inline Result check_generator(Problem& p, const std::vector<std::size_t>& which = {}) {
  const auto g = flatten(generator_loss_gradient(p.critic, p.generator, p.seeds, p.real, p.config).grad);
  auto loss = [&] { return generator_loss(p.critic, p.generator, p.seeds, p.real, p.config); };
  auto pattern = [&] { return generator_pattern(p.critic, p.generator, p.seeds, p.real); };
  return check(p.generator, g, loss, pattern, which);
}

/// Evenly spread sample of parameter indices covering every layer.
inline std::vector<std::size_t> sample_indices(const Mlp& net, std::size_t per_layer, RngStream rng) {
  std::vector<std::size_t> idx;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto nw = static_cast<std::size_t>(net.weights[l].size());
    const auto nb = static_cast<std::size_t>(net.biases[l].size());
    for (std::size_t k = 0; k < std::min(per_layer, nw); ++k) idx.push_back(offset + rng.index(nw));
    for (std::size_t k = 0; k < std::min(per_layer / 4 + 1, nb); ++k) idx.push_back(offset + nw + rng.index(nb));
    offset += nw + nb;
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace gradcheck
