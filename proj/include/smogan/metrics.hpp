#pragma once

#include <array>
#include <utility>

#include "smogan/coredata.hpp"
#include "smogan/relevance.hpp"
#include "smogan/smogn.hpp"

namespace smogan {

double rmse(const Vector& y, const Vector& yhat);

/// SER_t: squared error summed over points with phi(y_i) >= t.
double ser_at(const Vector& y, const Vector& yhat, const Vector& relevance, double t);

/// Area under SER_t for t in [0, 1], integrated exactly over the steps of
/// the piecewise-constant curve.
double sera(const Vector& y, const Vector& yhat, const RelevanceFn& fn);
double sera_steps(const Vector& y, const Vector& yhat, const Vector& relevance);

/// Closed form sum_i phi(y_i) (y_i - yhat_i)^2.
double sera_closed_form(const Vector& y, const Vector& yhat, const Vector& relevance);

struct UtilityParams {
  double t_r = kDefaultRareThreshold;
  double tolerance_tau = 1.0;  // error at which the bounded loss saturates
};

/// tau = (max - min) / 4 of the training targets.
UtilityParams default_utility_params(const Vector& train_targets, double t_r);

/// Bounded loss G = min(1, |yhat - y| / tau);
/// U = min(phi(y)(1 - G) - max(phi(y), phi(yhat)) G, phi(yhat)).
/// The cap at phi(yhat) only bites when the prediction is close to but less
/// relevant than the truth; it keeps phi-precision within [0, 1].
double utility(double yhat, double y, const RelevanceFn& fn, const UtilityParams& params);

struct PhiScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty_prediction_region = false;  // no phi(yhat) > t_r
  bool empty_true_region = false;        // no phi(y) > t_r
  bool empty_region() const noexcept { return empty_prediction_region || empty_true_region; }
};

PhiScores precision_recall_f1(const Vector& y, const Vector& yhat, const RelevanceFn& fn,
                              const UtilityParams& params);

// ---- diagnostics -------------------------------------------------------------

/// Pearson correlation over columns; constant columns correlate 0 with
/// everything (diagonal stays 1).
Matrix correlation_matrix(const Matrix& data);

double frobenius_gap(const Matrix& a, const Matrix& b);

std::pair<double, double> correlation_frobenius_gap(const Matrix& real, const Matrix& pool_a,
                                                    const Matrix& pool_b);
std::pair<double, double> correlation_frobenius_gap(const Dataset& real, const SyntheticPool& pool_a,
                                                    const SyntheticPool& pool_b);

struct ColumnMoments {
  Vector mean, std, skewness, kurtosis;  // kurtosis is excess (normal = 0)
};

/// Moment-based statistics per column: std = sqrt(m2), skewness = m3 / m2^1.5,
/// kurtosis = m4 / m2^2 - 3, with m_k the central moments over n rows.
ColumnMoments column_moments(const Matrix& data);

/// Mean over columns of |stat(real) - stat(pool)| for mean, std, skewness
/// and kurtosis, in that order.
using MomentGaps = std::array<double, 4>;
MomentGaps moment_gaps(const Matrix& real, const Matrix& pool);
MomentGaps moment_gaps(const Dataset& real, const SyntheticPool& pool);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns
};

/// Cyclic Jacobi on a symmetric matrix until the off-diagonal norm is below tol.
SymmetricEigen jacobi_eigen(const Matrix& sym, double tol = 1e-12, int max_sweeps = 100);

struct PcaResult {
  Matrix components;  // n_components x cols, unit rows
  Vector mean;
  Vector explained_ratios;
  Matrix projections;  // rows x n_components

  Matrix project(const Matrix& data) const;
};

PcaResult pca_project(const Matrix& data, int n_components);

struct DiagnosticReport {
  double frobenius_real_vs_pool = 0.0;
  MomentGaps moment_gaps{};
  Matrix pca_components;
  Vector explained_variance_ratios;
};

/// Compares one pool against the real rows; PCA is fitted on the real rows.
DiagnosticReport diagnose(const Matrix& real, const Matrix& pool, int n_components);

}  // namespace smogan
