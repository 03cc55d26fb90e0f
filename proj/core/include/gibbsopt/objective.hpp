#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gibbsopt {

using Vector = Eigen::VectorXd;

/// Piecewise-linear, strongly convex min-max instance
///
///   f(w) = lambda/2 |w|^2 + 1/n sum_i max_y f_i(y, w),
///   f_i(y, w) = a_{i,y} . (w - b'_i) + b_{i,y}.
///
/// Slopes are stored column-wise in a D x (n*|Y|) matrix so that the slopes of
/// one summand form a contiguous D x |Y| block.
class MinMaxProblem {
 public:
  MinMaxProblem() = default;
  /// Zero-initialized instance. Throws std::invalid_argument unless
  /// n, dim, label_count >= 1 and lambda >= 0.
  MinMaxProblem(std::size_t n, std::size_t dim, std::size_t label_count, double lambda);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::size_t label_count() const { return labels_; }
  double lambda() const { return lambda_; }

  auto slope(std::size_t i, std::size_t y) { return slopes_.col(column(i, y)); }
  auto slope(std::size_t i, std::size_t y) const { return slopes_.col(column(i, y)); }
  /// D x |Y| block of the slopes of summand i.
  auto slopes_of(std::size_t i) const {
    return slopes_.middleCols(static_cast<Eigen::Index>(i * labels_), static_cast<Eigen::Index>(labels_));
  }
  double& offset(std::size_t i, std::size_t y) { return offsets_(row(i), label(y)); }
  double offset(std::size_t i, std::size_t y) const { return offsets_(row(i), label(y)); }
  auto shift(std::size_t i) { return shifts_.col(row(i)); }
  auto shift(std::size_t i) const { return shifts_.col(row(i)); }

  const Eigen::MatrixXd& slopes() const { return slopes_; }
  const Eigen::MatrixXd& offsets() const { return offsets_; }
  const Eigen::MatrixXd& shifts() const { return shifts_; }

  /// Throws std::invalid_argument when i or y is out of range.
  void check_index(std::size_t i, std::size_t y) const;
  /// Throws std::invalid_argument when w does not have dimension D.
  void check_point(const Vector& w) const;

 private:
  Eigen::Index row(std::size_t i) const;
  Eigen::Index label(std::size_t y) const;
  Eigen::Index column(std::size_t i, std::size_t y) const;

  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::size_t labels_ = 0;
  double lambda_ = 0.0;
  Eigen::MatrixXd slopes_;   // D x (n*|Y|)
  Eigen::MatrixXd offsets_;  // n x |Y|
  Eigen::MatrixXd shifts_;   // D x n
};

struct BoltzmannDistribution {
  std::vector<double> probabilities;
  double log_partition = 0.0;  // log sum_y exp(beta * v_y)
  double beta = 0.0;
};

/// Constants of the complexity analysis, taken over a ball of given radius.
struct ProblemBounds {
  double Delta = 0.0;  // bound on partial derivatives of r + f_i
  double M = 0.0;      // bound on squared subgradient norms
  double L = 0.0;      // gradient Lipschitz constant of f^beta
  double ell = 0.0;    // Lipschitz constant of grad(r + f_i)
  double mu = 0.0;     // strong convexity
};

struct Subgradient {
  Vector direction;
  std::size_t label = 0;
};

double eval_piece(const MinMaxProblem& problem, std::size_t i, std::size_t y, const Vector& w);
/// All |Y| piece values of summand i at w.
Vector piece_values(const MinMaxProblem& problem, std::size_t i, const Vector& w);

double regularizer(const MinMaxProblem& problem, const Vector& w);
double eval_f(const MinMaxProblem& problem, const Vector& w);
/// g_i(w) = r(w) + max_y f_i(y, w).
double eval_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w);

/// (1/beta) log sum exp(beta v), max-shifted. Throws on empty input or beta <= 0.
double softmax(std::span<const double> values, double beta);
/// Index of the largest value; ties go to the smallest index.
std::size_t argmax(std::span<const double> values);

double eval_f_beta(const MinMaxProblem& problem, const Vector& w, double beta);
/// g_i^beta(w) = r(w) + max^beta_y f_i(y, w).
double eval_summand_beta(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta);

BoltzmannDistribution boltzmann(std::span<const double> values, double beta);
BoltzmannDistribution boltzmann(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta);

/// Gradient of g_i^beta: lambda w + E_{P_i}[a_{i,Y}].
Vector grad_summand_beta(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta);
Vector grad_f_beta(const MinMaxProblem& problem, const Vector& w, double beta);
/// Hessian of f^beta: lambda I + beta/n sum_i Cov_{P_i}(a_{i,Y}).
Eigen::MatrixXd hessian_f_beta(const MinMaxProblem& problem, const Vector& w, double beta);

/// Exact-argmax subgradient of g_i; returns (lambda w + a_{i,y*}, y*).
Subgradient subgrad_f_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w);

ProblemBounds compute_bounds(const MinMaxProblem& problem, double radius, double beta);

/// Tighter gradient Lipschitz constant of every g_i^beta:
/// lambda + beta * max_i diam({a_{i,y}})^2 / 4.
double smooth_lipschitz(const MinMaxProblem& problem, double beta);

/// Exact sup of |lambda w + a_{i,y}|^2 over the ball |w - center| <= radius,
/// i.e. the M of the subgradient analysis for a ball-constrained run.
double exact_subgradient_bound(const MinMaxProblem& problem, const Vector& center, double radius);

/// beta = 2 log|Y| / epsilon. For |Y| < 2 the formula degenerates and
/// `floor` is returned instead.
double beta_for_epsilon(std::size_t label_count, double epsilon, double floor = 1.0);

}  // namespace gibbsopt
