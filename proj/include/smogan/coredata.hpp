#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "smogan/rng.hpp"

namespace smogan {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Numeric feature matrix plus continuous target. column_names holds the
/// feature names followed by the target name.
struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> column_names;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index feature_count() const noexcept { return features.cols(); }
  const std::string& target_name() const { return column_names.back(); }

  /// Features and target side by side (n x (p+1)).
  Matrix joint() const;
  static Dataset from_joint(const Matrix& joint, std::vector<std::string> names);

  Dataset select(const std::vector<Eigen::Index>& rows) const;

  /// Throws unless the shape and finiteness invariants hold.
  void validate() const;
};

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);
Dataset parse_csv(std::istream& in, const std::string& target_column);
void write_csv(const std::filesystem::path& path, const Dataset& data);

/// Per-column z-score transform over features and target.
struct Scaler {
  Vector mean;  // p + 1 entries, target last
  Vector std;

  Dataset apply(const Dataset& data) const;
  Dataset invert(const Dataset& data) const;
  Matrix apply_joint(const Matrix& joint) const;
  Matrix invert_joint(const Matrix& joint) const;

  double scale_target(double y) const { return (y - mean[mean.size() - 1]) / std[std.size() - 1]; }
  double unscale_target(double z) const { return z * std[std.size() - 1] + mean[mean.size() - 1]; }
};

inline constexpr double kMinScalerStd = 1e-12;

Scaler fit_scaler(const Dataset& data);
Dataset apply_scaler(const Dataset& data, const Scaler& scaler);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

Split train_test_split(const Dataset& data, double test_fraction, RngStream rng);

}  // namespace smogan
