#include "gibbsopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gibbsopt {

MinMaxProblem::MinMaxProblem(std::size_t n, std::size_t dim, std::size_t label_count, double lambda)
    : n_(n), dim_(dim), labels_(label_count), lambda_(lambda) {
  if (n == 0 || dim == 0 || label_count == 0) {
    throw std::invalid_argument("MinMaxProblem: n, D and |Y| must all be at least 1");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("MinMaxProblem: lambda must be a finite nonnegative number");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  slopes_ = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(n * label_count));
  offsets_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(label_count));
  shifts_ = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(n));
}

void MinMaxProblem::check_index(std::size_t i, std::size_t y) const {
  if (i >= n_) {
    throw std::invalid_argument("summand index " + std::to_string(i) + " out of range (n = " +
                                std::to_string(n_) + ")");
  }
  if (y >= labels_) {
    throw std::invalid_argument("label index " + std::to_string(y) + " out of range (|Y| = " +
                                std::to_string(labels_) + ")");
  }
}

void MinMaxProblem::check_point(const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != dim_) {
    throw std::invalid_argument("point has dimension " + std::to_string(w.size()) + ", expected " +
                                std::to_string(dim_));
  }
}

Eigen::Index MinMaxProblem::row(std::size_t i) const {
  check_index(i, 0);
  return static_cast<Eigen::Index>(i);
}

Eigen::Index MinMaxProblem::label(std::size_t y) const {
  check_index(0, y);
  return static_cast<Eigen::Index>(y);
}

Eigen::Index MinMaxProblem::column(std::size_t i, std::size_t y) const {
  check_index(i, y);
  return static_cast<Eigen::Index>(i * labels_ + y);
}

double eval_piece(const MinMaxProblem& problem, std::size_t i, std::size_t y, const Vector& w) {
  problem.check_index(i, y);
  problem.check_point(w);
  return problem.slope(i, y).dot(w - problem.shift(i)) + problem.offset(i, y);
}

Vector piece_values(const MinMaxProblem& problem, std::size_t i, const Vector& w) {
  problem.check_index(i, 0);
  problem.check_point(w);
  const Vector centered = w - problem.shift(i);
  return problem.slopes_of(i).transpose() * centered + problem.offsets().row(static_cast<Eigen::Index>(i)).transpose();
}

double regularizer(const MinMaxProblem& problem, const Vector& w) {
  problem.check_point(w);
  return 0.5 * problem.lambda() * w.squaredNorm();
}

double eval_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w) {
  return regularizer(problem, w) + piece_values(problem, i, w).maxCoeff();
}

double eval_f(const MinMaxProblem& problem, const Vector& w) {
  problem.check_point(w);
  double total = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) total += piece_values(problem, i, w).maxCoeff();
  return regularizer(problem, w) + total / static_cast<double>(problem.n());
}

double softmax(std::span<const double> values, double beta) {
  if (values.empty()) throw std::invalid_argument("softmax: empty value list");
  if (!(beta > 0.0)) throw std::invalid_argument("softmax: beta must be positive");
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(beta * (v - top));
  return top + std::log(sum) / beta;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty value list");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

namespace {

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

double eval_summand_beta(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta) {
  const Vector values = piece_values(problem, i, w);
  return regularizer(problem, w) + softmax(as_span(values), beta);
}

double eval_f_beta(const MinMaxProblem& problem, const Vector& w, double beta) {
  problem.check_point(w);
  double total = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const Vector values = piece_values(problem, i, w);
    total += softmax(as_span(values), beta);
  }
  return regularizer(problem, w) + total / static_cast<double>(problem.n());
}

BoltzmannDistribution boltzmann(std::span<const double> values, double beta) {
  if (values.empty()) throw std::invalid_argument("boltzmann: empty value list");
  if (!(beta > 0.0)) throw std::invalid_argument("boltzmann: beta must be positive");
  BoltzmannDistribution dist;
  dist.beta = beta;
  dist.probabilities.resize(values.size());
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    dist.probabilities[k] = std::exp(beta * (values[k] - top));
    sum += dist.probabilities[k];
  }
  for (double& p : dist.probabilities) p /= sum;
  dist.log_partition = beta * top + std::log(sum);
  return dist;
}

BoltzmannDistribution boltzmann(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta) {
  const Vector values = piece_values(problem, i, w);
  return boltzmann(as_span(values), beta);
}

Vector grad_summand_beta(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta) {
  const BoltzmannDistribution dist = boltzmann(problem, i, w, beta);
  const Eigen::Map<const Vector> weights(dist.probabilities.data(), static_cast<Eigen::Index>(dist.probabilities.size()));
  return problem.lambda() * w + problem.slopes_of(i) * weights;
}

Vector grad_f_beta(const MinMaxProblem& problem, const Vector& w, double beta) {
  problem.check_point(w);
  Vector expectation = Vector::Zero(w.size());
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const BoltzmannDistribution dist = boltzmann(problem, i, w, beta);
    const Eigen::Map<const Vector> weights(dist.probabilities.data(), static_cast<Eigen::Index>(dist.probabilities.size()));
    expectation.noalias() += problem.slopes_of(i) * weights;
  }
  return problem.lambda() * w + expectation / static_cast<double>(problem.n());
}

Eigen::MatrixXd hessian_f_beta(const MinMaxProblem& problem, const Vector& w, double beta) {
  problem.check_point(w);
  const auto d = static_cast<Eigen::Index>(problem.dim());
  Eigen::MatrixXd covariance_sum = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const BoltzmannDistribution dist = boltzmann(problem, i, w, beta);
    const Eigen::Map<const Vector> weights(dist.probabilities.data(), static_cast<Eigen::Index>(dist.probabilities.size()));
    const auto slopes = problem.slopes_of(i);
    const Vector mean = slopes * weights;
    const Eigen::MatrixXd centered = slopes.colwise() - mean;
    covariance_sum.noalias() += centered * weights.asDiagonal() * centered.transpose();
  }
  Eigen::MatrixXd hessian = (beta / static_cast<double>(problem.n())) * covariance_sum;
  hessian.diagonal().array() += problem.lambda();
  return hessian;
}

Subgradient subgrad_f_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w) {
  const Vector values = piece_values(problem, i, w);
  Subgradient result;
  result.label = argmax(as_span(values));
  result.direction = problem.lambda() * w + problem.slope(i, result.label);
  return result;
}

ProblemBounds compute_bounds(const MinMaxProblem& problem, double radius, double beta) {
  if (!(radius > 0.0)) throw std::invalid_argument("compute_bounds: radius must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("compute_bounds: beta must be positive");
  const double max_slope = problem.slopes().size() == 0 ? 0.0 : problem.slopes().cwiseAbs().maxCoeff();
  const double dim = static_cast<double>(problem.dim());
  ProblemBounds bounds;
  bounds.Delta = problem.lambda() * radius + max_slope;
  bounds.M = dim * bounds.Delta * bounds.Delta;
  bounds.ell = problem.lambda();
  bounds.L = beta * dim * bounds.Delta * bounds.Delta + bounds.ell;
  bounds.mu = problem.lambda();
  return bounds;
}

double smooth_lipschitz(const MinMaxProblem& problem, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("smooth_lipschitz: beta must be positive");
  // The variance of u.a for a unit u over any distribution on the slopes of a
  // summand is at most (range of u.a)^2 / 4 <= diam^2 / 4.
  double widest = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const auto slopes = problem.slopes_of(i);
    for (Eigen::Index p = 0; p < slopes.cols(); ++p) {
      for (Eigen::Index q = p + 1; q < slopes.cols(); ++q) {
        widest = std::max(widest, (slopes.col(p) - slopes.col(q)).squaredNorm());
      }
    }
  }
  return problem.lambda() + beta * widest / 4.0;
}

double exact_subgradient_bound(const MinMaxProblem& problem, const Vector& center, double radius) {
  problem.check_point(center);
  if (!(radius >= 0.0)) throw std::invalid_argument("exact_subgradient_bound: radius must be nonnegative");
  double best = 0.0;
  const Vector pull = problem.lambda() * center;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    for (std::size_t y = 0; y < problem.label_count(); ++y) {
      const double reach = (pull + problem.slope(i, y)).norm() + problem.lambda() * radius;
      best = std::max(best, reach * reach);
    }
  }
  return best;
}

double beta_for_epsilon(std::size_t label_count, double epsilon, double floor) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("beta_for_epsilon: epsilon must be positive");
  if (label_count < 2) return floor;
  return 2.0 * std::log(static_cast<double>(label_count)) / epsilon;
}

}  // namespace gibbsopt
