#include "smogan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smogan/error.hpp"

namespace smogan {

namespace {

void check_lengths(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch, "vectors have lengths " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
}

}  // namespace

double rmse(const Vector& y, const Vector& yhat) {
  check_lengths(y, yhat);
  if (y.size() < 1) throw Error(Errc::LengthMismatch, "RMSE of empty vectors");
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

double ser_at(const Vector& y, const Vector& yhat, const Vector& relevance, double t) {
  check_lengths(y, yhat);
  check_lengths(y, relevance);
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (relevance[i] >= t) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
  return s;
}

double sera_steps(const Vector& y, const Vector& yhat, const Vector& relevance) {
  check_lengths(y, yhat);
  check_lengths(y, relevance);
  const auto n = static_cast<std::size_t>(y.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return relevance[static_cast<Eigen::Index>(a)] <
                                                              relevance[static_cast<Eigen::Index>(b)]; });
  // suffix[k] = SER_t for t in (phi_(k-1), phi_(k)]
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const auto i = static_cast<Eigen::Index>(order[k]);
    suffix[k] = suffix[k + 1] + (yhat[i] - y[i]) * (yhat[i] - y[i]);
  }
  double area = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double level = std::clamp(relevance[static_cast<Eigen::Index>(order[k])], 0.0, 1.0);
    area += (level - prev) * suffix[k];
    prev = level;
  }
  return area;
}

double sera_closed_form(const Vector& y, const Vector& yhat, const Vector& relevance) {
  check_lengths(y, yhat);
  check_lengths(y, relevance);
  return (relevance.array() * (y - yhat).array().square()).sum();
}

double sera(const Vector& y, const Vector& yhat, const RelevanceFn& fn) {
  check_lengths(y, yhat);
  return sera_steps(y, yhat, phi(fn, y));
}

UtilityParams default_utility_params(const Vector& train_targets, double t_r) {
  if (train_targets.size() < 1) throw Error(Errc::TooFewValues, "no training targets");
  UtilityParams p;
  p.t_r = t_r;
  const double range = train_targets.maxCoeff() - train_targets.minCoeff();
  p.tolerance_tau = range > 0.0 ? range / 4.0 : 1.0;
  return p;
}

double utility(double yhat, double y, const RelevanceFn& fn, const UtilityParams& params) {
  const double py = fn(y);
  const double pyhat = fn(yhat);
  const double loss = std::min(1.0, std::abs(yhat - y) / params.tolerance_tau);
  const double u = py * (1.0 - loss) - std::max(py, pyhat) * loss;
  return std::min(u, pyhat);
}

PhiScores precision_recall_f1(const Vector& y, const Vector& yhat, const RelevanceFn& fn,
                              const UtilityParams& params) {
  check_lengths(y, yhat);
  double pn = 0.0, pd = 0.0, rn = 0.0, rd = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double py = fn(y[i]);
    const double pyhat = fn(yhat[i]);
    const double u = utility(yhat[i], y[i], fn, params);
    if (pyhat > params.t_r) {
      pn += 1.0 + u;
      pd += 1.0 + pyhat;
    }
    if (py > params.t_r) {
      rn += 1.0 + u;
      rd += 1.0 + py;
    }
  }
  PhiScores s;
  s.empty_prediction_region = pd == 0.0;
  s.empty_true_region = rd == 0.0;
  s.precision = s.empty_prediction_region ? 0.0 : pn / pd;
  s.recall = s.empty_true_region ? 0.0 : rn / rd;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

}  // namespace smogan
