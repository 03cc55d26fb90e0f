#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gibbsopt {

using Vector = Eigen::VectorXd;

/// A label in {-1, +1}^ell.
using Label = std::vector<int>;

/// Quadratic scoring model over binary label vectors:
///
///   s(x, y) = theta1 . triu(y y^T) + theta2 . (phi(x) o y) + theta3 . y
///
/// triu is the strict upper triangle (i < j) in row-major order; the diagonal
/// y_i^2 = 1 only adds a constant. Parameters concatenate as
/// (theta1, theta2, theta3), length ell(ell-1)/2 + 2 ell.
struct IsingLabelModel {
  std::size_t ell = 0;
  Vector theta1;
  Vector theta2;
  Vector theta3;
  double beta = 1.0;

  IsingLabelModel() = default;
  /// All-zero parameters.
  IsingLabelModel(std::size_t ell, double beta);

  static std::size_t pair_count(std::size_t ell) { return ell * (ell - (ell > 0 ? 1 : 0)) / 2; }
  std::size_t parameter_count() const { return pair_count(ell) + 2 * ell; }

  Vector parameters() const;
  void set_parameters(const Vector& params);
  /// Throws std::invalid_argument on inconsistent lengths or beta < 0.
  void validate() const;
};

/// Row-major position of the pair (i, j), i < j, in theta1.
std::size_t pair_index(std::size_t ell, std::size_t i, std::size_t j);

/// Throws std::invalid_argument unless every entry is -1 or +1.
void check_label(std::span<const int> y);

/// (triu(y y^T); features o y; y).
Vector feature_map(std::span<const int> y, const Vector& features);

double eval_score(const IsingLabelModel& model, const Vector& features, std::span<const int> y);

std::size_t hamming(std::span<const int> a, std::span<const int> b);

/// Coefficient h_k of y_k in the target exponent, so that the conditional of
/// spin k given the rest is P(y_k = +1) = sigma(2 beta h_k). When `anchor` is
/// nonempty the target includes the Hamming loss to the anchor label.
double local_field(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                   std::span<const int> spins, std::size_t k);

}  // namespace gibbsopt
