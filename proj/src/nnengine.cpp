#include "smogan/nnengine.hpp"

#include <cmath>

#include "smogan/error.hpp"

namespace smogan {

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

void Mlp::validate() const {
  if (widths.size() < 2) throw Error(Errc::BadWidths, "need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw Error(Errc::BadWidths, "layer widths must be positive");
  if (weights.size() != widths.size() - 1 || biases.size() != widths.size() - 1)
    throw Error(Errc::ShapeMismatch, "layer count does not match widths");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != widths[l + 1] || weights[l].cols() != widths[l] ||
        biases[l].size() != widths[l + 1])
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(l) + " has wrong shape");
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(l) + " has non-finite values");
  }
}

MlpGradient MlpGradient::zeros_like(const Mlp& net) {
  MlpGradient g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Vector::Zero(net.biases[l].size()));
  }
  return g;
}

MlpGradient& MlpGradient::operator+=(const MlpGradient& o) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += o.weights[l];
    biases[l] += o.biases[l];
  }
  return *this;
}

MlpGradient& MlpGradient::operator*=(double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= s;
    biases[l] *= s;
  }
  return *this;
}

bool MlpGradient::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

Mlp init_mlp(const std::vector<int>& widths, RngStream rng) {
  if (widths.size() < 2) throw Error(Errc::BadWidths, "need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw Error(Errc::BadWidths, "layer widths must be positive");
  Mlp net;
  net.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double half = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    Matrix w(widths[l + 1], widths[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = half * (2.0 * rng.uniform() - 1.0);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(widths[l + 1]));
  }
  return net;
}

std::vector<int> gan_widths(int d, int out, std::vector<int> hidden) {
  std::vector<int> w{d};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

namespace {

void check_input(const Mlp& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim())
    throw Error(Errc::ShapeMismatch, "batch has " + std::to_string(batch.cols()) +
                                         " columns, network expects " +
                                         std::to_string(net.input_dim()));
}

Matrix affine(const Matrix& in, const Matrix& w, const Vector& b) {
  Matrix out(in.rows(), w.rows());
  out.noalias() = in * w.transpose();
  out.rowwise() += b.transpose();
  return out;
}

// Masks are applied as 0/1 multipliers; a pre-activation of exactly 0 is inactive.
Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

Matrix forward(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  Matrix h = batch;
  const auto L = net.layer_count();
  for (std::size_t l = 0; l < L; ++l) {
    Matrix a = affine(h, net.weights[l], net.biases[l]);
    h = (l + 1 < L) ? Matrix(a.cwiseMax(0.0)) : std::move(a);
  }
  return h;
}

ForwardTrace forward_trace(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  ForwardTrace t;
  const auto L = net.layer_count();
  t.inputs.reserve(L);
  t.preacts.reserve(L);
  t.inputs.push_back(batch);
  for (std::size_t l = 0; l < L; ++l) {
    t.preacts.push_back(affine(t.inputs[l], net.weights[l], net.biases[l]));
    if (l + 1 < L) t.inputs.push_back(t.preacts[l].cwiseMax(0.0));
  }
  return t;
}

Matrix backward(const Mlp& net, const ForwardTrace& trace, const Matrix& upstream,
                MlpGradient* grad) {
  const auto L = net.layer_count();
  if (upstream.rows() != trace.output().rows() || upstream.cols() != trace.output().cols())
    throw Error(Errc::ShapeMismatch, "upstream gradient does not match network output");
  Matrix delta = upstream;  // d loss / d preacts[l]
  for (std::size_t l = L; l-- > 0;) {
    if (grad) {
      grad->weights[l].noalias() += delta.transpose() * trace.inputs[l];
      grad->biases[l] += delta.colwise().sum().transpose();
    }
    Matrix d_in(delta.rows(), net.weights[l].cols());
    d_in.noalias() = delta * net.weights[l];
    if (l == 0) return d_in;
    delta = d_in.cwiseProduct(relu_mask(trace.preacts[l - 1]));
  }
  return delta;  // unreachable for L >= 1
}

Vector input_gradient(const Mlp& net, const Vector& point) {
  if (net.output_dim() != 1) throw Error(Errc::NonScalarOutput, "input gradient needs a scalar output");
  Matrix row = point.transpose();
  return input_gradients(net, row).row(0).transpose();
}

Matrix input_gradients(const Mlp& net, const Matrix& points) {
  if (net.output_dim() != 1) throw Error(Errc::NonScalarOutput, "input gradient needs a scalar output");
  const ForwardTrace t = forward_trace(net, points);
  return backward(net, t, Matrix::Ones(points.rows(), 1), nullptr);
}

double gradient_norm_penalty(const Mlp& critic, const Matrix& points, MlpGradient* grad,
                             double scale) {
  if (critic.output_dim() != 1)
    throw Error(Errc::NonScalarOutput, "gradient penalty needs a scalar critic");
  const ForwardTrace t = forward_trace(critic, points);
  const auto L = critic.layer_count();
  const auto B = points.rows();

  std::vector<Matrix> masks;
  masks.reserve(L - 1);
  for (std::size_t l = 0; l + 1 < L; ++l) masks.push_back(relu_mask(t.preacts[l]));

  // delta[l] = d D / d preacts[l] for every row.
  std::vector<Matrix> delta(L);
  delta[L - 1] = Matrix::Ones(B, 1);
  for (std::size_t l = L - 1; l > 0; --l) {
    Matrix d(B, critic.weights[l].cols());
    d.noalias() = delta[l] * critic.weights[l];
    delta[l - 1] = d.cwiseProduct(masks[l - 1]);
  }
  Matrix g(B, critic.input_dim());
  g.noalias() = delta[0] * critic.weights[0];

  const Vector norms = g.rowwise().norm();
  const double value = (norms.array() - 1.0).square().mean();
  if (!grad) return value;

  // r_b = d/dg_b of the batch mean; the penalty then differentiates as the
  // masked linear chain evaluated on r, so dW_l = delta[l]^T * tangent_l.
  Matrix tangent(B, critic.input_dim());
  for (Eigen::Index b = 0; b < B; ++b) {
    const double n = norms[b];
    const double c = n > 0.0 ? scale * 2.0 * (n - 1.0) / (n * static_cast<double>(B)) : 0.0;
    tangent.row(b) = c * g.row(b);
  }
  for (std::size_t l = 0; l < L; ++l) {
    grad->weights[l].noalias() += delta[l].transpose() * tangent;
    if (l + 1 < L) {
      Matrix next(B, critic.weights[l].rows());
      next.noalias() = tangent * critic.weights[l].transpose();
      tangent = next.cwiseProduct(masks[l]);
    }
  }
  return value;
}

AdamState make_adam(const Mlp& net, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.first_moment = MlpGradient::zeros_like(net);
  s.second_moment = MlpGradient::zeros_like(net);
  return s;
}

namespace {

template <class Param, class Buf>
void adam_update(Param& theta, const Buf& g, Buf& m, Buf& v, const AdamConfig& c, double bc1,
                 double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  theta.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(AdamState& s, Mlp& net, const MlpGradient& grad) {
  if (grad.weights.size() != net.weights.size() || s.first_moment.weights.size() != net.weights.size())
    throw Error(Errc::ShapeMismatch, "optimizer state does not match network");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (grad.weights[l].rows() != net.weights[l].rows() ||
        grad.weights[l].cols() != net.weights[l].cols() ||
        grad.biases[l].size() != net.biases[l].size())
      throw Error(Errc::ShapeMismatch, "gradient shape differs at layer " + std::to_string(l));
  }
  ++s.step_count;
  const double t = static_cast<double>(s.step_count);
  const double bc1 = 1.0 - std::pow(s.config.beta1, t);
  const double bc2 = 1.0 - std::pow(s.config.beta2, t);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    adam_update(net.weights[l], grad.weights[l], s.first_moment.weights[l],
                s.second_moment.weights[l], s.config, bc1, bc2);
    adam_update(net.biases[l], grad.biases[l], s.first_moment.biases[l], s.second_moment.biases[l],
                s.config, bc1, bc2);
  }
}

}  // namespace smogan
