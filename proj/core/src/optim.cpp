#include "gibbsopt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace gibbsopt {

// ---------------------------------------------------------------------------
// Schedules and projections

StepSchedule StepSchedule::decay(double gamma0, double c_gamma) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw std::invalid_argument("step schedule: gamma0 must be positive");
  if (!(c_gamma >= 0.0) || !std::isfinite(c_gamma)) throw std::invalid_argument("step schedule: c_gamma must be nonnegative");
  StepSchedule s;
  s.kind_ = ScheduleKind::decay;
  s.gamma0_ = gamma0;
  s.c_gamma_ = c_gamma;
  return s;
}

StepSchedule StepSchedule::strong_convex(unsigned eta, double mu) {
  if (eta < 1) throw std::invalid_argument("step schedule: eta must be at least 1");
  if (!(mu > 0.0)) throw std::invalid_argument("step schedule: mu must be positive");
  StepSchedule s;
  s.kind_ = ScheduleKind::strong_convex;
  s.eta_ = eta;
  s.mu_ = mu;
  s.gamma0_ = 1.0 / mu;
  return s;
}

StepSchedule StepSchedule::constant(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("step schedule: gamma must be positive");
  StepSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.gamma0_ = gamma;
  return s;
}

double StepSchedule::operator()(std::size_t t) const {
  const auto tt = static_cast<double>(t);
  switch (kind_) {
    case ScheduleKind::decay:
      return gamma0_ / (1.0 + tt * c_gamma_);
    case ScheduleKind::strong_convex:
      return static_cast<double>(eta_) / (mu_ * (tt + static_cast<double>(eta_)));
    case ScheduleKind::constant:
      return gamma0_;
  }
  return gamma0_;
}

Projection Projection::ball(Vector center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("projection: radius must be positive");
  if (center.size() == 0) throw std::invalid_argument("projection: empty center");
  Projection p;
  p.kind = Kind::euclidean_ball;
  p.center = std::move(center);
  p.radius = radius;
  return p;
}

Vector project(const Projection& projection, const Vector& v) {
  if (projection.kind == Projection::Kind::unconstrained) return v;
  if (v.size() != projection.center.size()) throw std::invalid_argument("project: dimension mismatch");
  const Vector offset = v - projection.center;
  const double norm = offset.norm();
  if (norm <= projection.radius) return v;
  return projection.center + offset * (projection.radius / norm);
}

// ---------------------------------------------------------------------------
// Oracles

SmoothGradientOracle::SmoothGradientOracle(const MinMaxProblem& problem, double beta)
    : problem_(&problem), beta_(beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("gradient oracle: beta must be positive");
}

SmoothGradientOracle SmoothGradientOracle::noisy(const MinMaxProblem& problem, double beta,
                                                 NoisyGradientConfig noise) {
  if (!(noise.theta >= 0.0)) throw std::invalid_argument("gradient oracle: theta must be nonnegative");
  SmoothGradientOracle o(problem, beta);
  o.mode_ = Mode::noisy;
  o.noise_ = noise;
  o.streams_.reserve(problem.n());
  for (std::size_t i = 0; i < problem.n(); ++i) o.streams_.push_back(Rng::stream(noise.seed, i));
  return o;
}

SmoothGradientOracle SmoothGradientOracle::monte_carlo(const MinMaxProblem& problem, double beta,
                                                       std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("gradient oracle: need at least one sample");
  SmoothGradientOracle o(problem, beta);
  o.mode_ = Mode::monte_carlo;
  o.samples_ = samples;
  o.streams_.reserve(problem.n());
  for (std::size_t i = 0; i < problem.n(); ++i) o.streams_.push_back(Rng::stream(seed, i));
  return o;
}

void SmoothGradientOracle::set_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("gradient oracle: beta must be positive");
  beta_ = beta;
}

void SmoothGradientOracle::set_theta(double theta) {
  if (mode_ != Mode::noisy) throw std::logic_error("gradient oracle: theta only applies to the noisy mode");
  if (!(theta >= 0.0)) throw std::invalid_argument("gradient oracle: theta must be nonnegative");
  noise_.theta = theta;
}

Vector SmoothGradientOracle::operator()(std::size_t i, const Vector& w) {
  switch (mode_) {
    case Mode::exact:
      return grad_summand_beta(*problem_, i, w, beta_);
    case Mode::noisy:
      return noisy_grad_summand(grad_summand_beta(*problem_, i, w, beta_), noise_, streams_.at(i));
    case Mode::monte_carlo:
      return mc_grad_summand(*problem_, i, w, beta_, samples_, streams_.at(i));
  }
  return {};
}

ArgmaxSubgradientOracle::ArgmaxSubgradientOracle(const MinMaxProblem& problem, ArgmaxOracleConfig config)
    : problem_(&problem), config_(config), rng_(config.seed) {
  config_.failure_probability(0);  // validates the configuration
}

Vector ArgmaxSubgradientOracle::operator()(std::size_t i, const Vector& w, std::size_t t) {
  const Vector values = piece_values(*problem_, i, w);
  const std::span<const double> view(values.data(), static_cast<std::size_t>(values.size()));
  const std::size_t y = noisy_argmax(view, config_.failure_probability(t), rng_);
  if (y != argmax(view)) ++failures_;
  return problem_->lambda() * w + problem_->slope(i, y);
}

// ---------------------------------------------------------------------------
// Optimizers

void sgd_step(IterateState& state, std::size_t n, const GradientOracle& oracle, const StepSchedule& schedule,
              const Projection& projection, Rng& rng) {
  const std::size_t i = rng.index(n);
  const Vector g = oracle(i, state.w);
  state.w = project(projection, state.w - schedule(state.t) * g);
  ++state.t;
}

AveragedState AveragedState::start(const Vector& w0, unsigned eta) {
  if (eta < 1) throw std::invalid_argument("averaging: eta must be at least 1");
  return AveragedState{w0, w0, 0, eta};
}

void subsgdp_step(AveragedState& state, std::size_t n, const SubgradientOracle& oracle,
                  const StepSchedule& schedule, const Projection& projection, Rng& rng) {
  const std::size_t i = rng.index(n);
  const Vector g = oracle(i, state.w, state.t);
  state.w = project(projection, state.w - schedule(state.t) * g);
  const auto t = static_cast<double>(state.t);
  const auto eta = static_cast<double>(state.eta);
  state.w_bar = (t / (t + eta + 1.0)) * state.w_bar + ((eta + 1.0) / (t + eta + 1.0)) * state.w;
  ++state.t;
}

SagaState saga_init(const Vector& w0, std::size_t n, const GradientOracle& oracle) {
  if (n == 0) throw std::invalid_argument("saga_init: need at least one summand");
  SagaState s;
  s.w = w0;
  s.cache.resize(w0.size(), static_cast<Eigen::Index>(n));
  s.anchors = w0.replicate(1, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) s.cache.col(static_cast<Eigen::Index>(i)) = oracle(i, w0);
  s.cache_avg = s.cache.rowwise().mean();
  return s;
}

void saga_step_index(SagaState& state, std::size_t j, const GradientOracle& oracle, double gamma,
                     const Projection& projection) {
  const std::size_t n = state.n();
  if (j >= n) throw std::invalid_argument("saga_step: summand index out of range");
  const auto col = static_cast<Eigen::Index>(j);
  const Vector fresh = oracle(j, state.w);
  const Vector old = state.cache.col(col);
  const Vector v = state.w - gamma * (fresh - old + state.cache_avg);
  state.cache_avg += (fresh - old) / static_cast<double>(n);
  state.cache.col(col) = fresh;
  state.anchors.col(col) = state.w;
  state.w = project(projection, v);
  ++state.t;
  if (++state.since_resync >= kSagaResyncPeriod) {
    state.cache_avg = state.cache.rowwise().mean();
    state.since_resync = 0;
  }
}

std::size_t saga_step(SagaState& state, const GradientOracle& oracle, const StepSchedule& schedule,
                      const Projection& projection, Rng& rng) {
  const std::size_t j = rng.index(state.n());
  saga_step_index(state, j, oracle, schedule(state.t), projection);
  return j;
}

double beta_schedule_step(double current_beta, std::size_t t, const BetaSchedule& schedule) {
  if (schedule.period < 1) throw std::invalid_argument("beta schedule: period must be at least 1");
  if (t > 0 && t % schedule.period == 0) return current_beta + schedule.increment;
  return current_beta;
}

// ---------------------------------------------------------------------------
// A-SAGA parameters

AsagaParams asaga_params(const ProblemBounds& bounds, std::size_t n, double w_dist, std::size_t dim,
                         ThetaConstant constant) {
  if (!(bounds.L > 0.0)) throw std::invalid_argument("asaga_params: L must be positive");
  if (!(bounds.mu > 0.0)) throw std::invalid_argument("asaga_params: mu must be positive");
  if (n == 0 || dim == 0) throw std::invalid_argument("asaga_params: n and D must be at least 1");
  if (!(w_dist >= 0.0)) throw std::invalid_argument("asaga_params: w_dist must be nonnegative");
  const double L = bounds.L;
  const double mu = bounds.mu;
  const double sqrt_d = std::sqrt(static_cast<double>(dim));
  const double k = constant == ThetaConstant::two_ninths ? 2.0 / (9.0 * L) : 5.0 / (18.0 * L);

  AsagaParams p;
  p.alpha = 8.0;
  p.theta = std::min(1.0 / sqrt_d, mu * w_dist * w_dist / (2.0 * sqrt_d * (k + 2.0 * w_dist)));
  p.gamma = 1.0 / ((1.0 + p.alpha) * (1.0 + p.theta * sqrt_d) * L);
  p.c = 2.0 / (static_cast<double>(n) * p.gamma);
  p.inv_tau = std::min(1.0 / (2.0 * static_cast<double>(n)), p.gamma * mu / 2.0);
  return p;
}

AsagaParams saga_reference_params(const ProblemBounds& bounds, std::size_t n) {
  if (!(bounds.L > 0.0)) throw std::invalid_argument("saga_reference_params: L must be positive");
  if (!(bounds.mu >= 0.0)) throw std::invalid_argument("saga_reference_params: mu must be nonnegative");
  if (n == 0) throw std::invalid_argument("saga_reference_params: n must be at least 1");
  const double L = bounds.L;
  const double mu = bounds.mu;
  const auto nn = static_cast<double>(n);
  AsagaParams p;
  p.gamma = 1.0 / (2.0 * (mu * nn + L));
  p.c = 1.0 / (2.0 * p.gamma * (1.0 - p.gamma * mu) * nn);
  p.alpha = (2.0 * mu * nn + L) / L;
  p.inv_tau = p.gamma * mu;
  p.theta = 0.0;
  return p;
}

namespace {

constexpr double kRelativeSlack = 1e-12;

// lhs = sum(plus) - sum(minus) <= 0 up to rounding relative to the terms.
bool nonpositive(double lhs, double scale) { return lhs <= kRelativeSlack * scale; }

}  // namespace

AsagaInequalityReport verify_asaga_inequalities(const AsagaParams& p, const ProblemBounds& bounds, std::size_t n,
                                                std::size_t dim, double w_dist) {
  const double L = bounds.L;
  const double mu = bounds.mu;
  const auto nn = static_cast<double>(n);
  const double sqrt_d = std::sqrt(static_cast<double>(dim));
  const double delta = 1.0 + p.theta * sqrt_d;
  const double d = w_dist;
  const double g = p.gamma;
  AsagaInequalityReport r;

  {
    const double a = 1.0 / nn;
    const double b = 2.0 * p.c * g * ((L - mu) / L + g * mu * p.alpha * delta);
    r.lhs[0] = a - b;
    r.satisfied[0] = nonpositive(r.lhs[0], std::abs(a) + std::abs(b));
  }
  {
    const double inner = 2.0 * (1.0 + 1.0 / p.alpha) * delta * p.c * g * g * L;
    r.lhs[1] = p.inv_tau + inner - 1.0 / nn;
    r.satisfied[1] = nonpositive(r.lhs[1], std::abs(p.inv_tau) + std::abs(inner) + 1.0 / nn) && inner - 1.0 / nn < 0.0;
  }
  {
    const double head = (p.inv_tau - g * mu) * d * d;
    const double noise = 2.0 * g * g * p.theta * sqrt_d + g * g * p.theta * p.theta * static_cast<double>(dim) +
                         2.0 * g * p.theta * sqrt_d * d;
    r.lhs[2] = head + noise;
    const double scale = std::abs(p.inv_tau * d * d) + std::abs(g * mu * d * d) + std::abs(noise);
    const bool strict_ok = p.theta == 0.0 || p.inv_tau < g * mu;
    r.satisfied[2] = nonpositive(r.lhs[2], scale) && strict_ok;
  }
  {
    const double a = (1.0 + p.alpha) * g * delta;
    r.lhs[3] = a - 1.0 / L;
    r.satisfied[3] = nonpositive(r.lhs[3], std::abs(a) + 1.0 / L);
  }
  return r;
}

double lyapunov(const SagaState& state, const MinMaxProblem& problem, double beta, const Vector& w_star, double c) {
  problem.check_point(w_star);
  const std::size_t n = problem.n();
  if (state.n() != n) throw std::invalid_argument("lyapunov: state and problem disagree on n");
  double anchored = 0.0;
  double at_star = 0.0;
  double linear = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector phi = state.anchors.col(static_cast<Eigen::Index>(i));
    anchored += eval_summand_beta(problem, i, phi, beta);
    at_star += eval_summand_beta(problem, i, w_star, beta);
    linear += grad_summand_beta(problem, i, w_star, beta).dot(phi - w_star);
  }
  const auto nn = static_cast<double>(n);
  return anchored / nn - at_star / nn - linear / nn + c * (state.w - w_star).squaredNorm();
}

// ---------------------------------------------------------------------------
// Closed-form averaging

namespace {

__extension__ typedef unsigned __int128 u128;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    const u128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

// Rising factorial t (t+1) ... (t+m-1); false on overflow.
bool rising(std::size_t t, unsigned m, u128& out) {
  u128 acc = 1;
  for (unsigned k = 0; k < m; ++k) {
    const u128 f = static_cast<u128>(t) + k;
    if (f != 0 && acc > std::numeric_limits<u128>::max() / f) return false;
    acc *= f;
  }
  out = acc;
  return true;
}

double ratio(u128 num, u128 den) {
  const u128 g = gcd128(num, den);
  num /= g;
  den /= g;
  constexpr u128 exact_limit = u128{1} << 53;
  if (num <= exact_limit && den <= exact_limit) return static_cast<double>(num) / static_cast<double>(den);
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

}  // namespace

std::vector<double> averaging_weights(std::size_t T, unsigned eta) {
  if (eta < 1) throw std::invalid_argument("averaging_weights: eta must be at least 1");
  std::vector<double> w(T + 1, 0.0);
  if (T == 0) {
    w[0] = 1.0;
    return w;
  }
  // p(t) = (eta+1) P_t / (T (T+1) ... (T+eta)); the denominator is sum_t P_t times (eta+1).
  u128 den = 0;
  bool exact = rising(T, eta + 1, den);
  if (exact) {
    for (std::size_t t = 1; t <= T && exact; ++t) {
      u128 pt = 0;
      exact = rising(t, eta, pt) && pt <= std::numeric_limits<u128>::max() / (eta + 1);
      if (exact) w[t] = ratio(pt * (eta + 1), den);
    }
  }
  if (!exact) {
    const long double e = eta;
    const long double log_den = std::lgamma(static_cast<long double>(T) + e + 1) - std::lgamma(static_cast<long double>(T));
    for (std::size_t t = 1; t <= T; ++t) {
      const auto tt = static_cast<long double>(t);
      w[t] = static_cast<double>(std::exp(std::log(e + 1) + std::lgamma(tt + e) - std::lgamma(tt) - log_den));
    }
  }
  return w;
}

Vector closed_form_average(std::span<const Vector> iterates, unsigned eta) {
  if (iterates.empty()) throw std::invalid_argument("closed_form_average: no iterates");
  const std::vector<double> weights = averaging_weights(iterates.size() - 1, eta);
  Vector acc = Vector::Zero(iterates.front().size());
  for (std::size_t t = 0; t < iterates.size(); ++t) acc += weights[t] * iterates[t];
  return acc;
}

// ---------------------------------------------------------------------------
// Reference solve

ReferenceSolution reference_solve(const MinMaxProblem& problem, double beta, const Vector& w0, double tolerance,
                                  std::size_t max_iterations) {
  problem.check_point(w0);
  ReferenceSolution out;
  out.w = w0;
  Vector g = grad_f_beta(problem, out.w, beta);
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    out.gradient_norm = g.norm();
    if (out.gradient_norm <= tolerance) {
      out.converged = true;
      return out;
    }
    const Vector dir = -hessian_f_beta(problem, out.w, beta).ldlt().solve(g);
    const double f0 = eval_f_beta(problem, out.w, beta);
    const double slope = g.dot(dir);
    // Armijo backtracking. Near the optimum the test is swamped by rounding
    // in f, so a step that shrinks the gradient without raising f beyond
    // rounding is accepted as well.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
    Vector trial;
    Vector g_trial;
    for (double step = 1.0;; step *= 0.5) {
      trial = out.w + step * dir;
      g_trial = grad_f_beta(problem, trial, beta);
      const double f_trial = eval_f_beta(problem, trial, beta);
      if (f_trial <= f0 + 1e-4 * step * slope) break;
      if (g_trial.norm() < out.gradient_norm && f_trial <= f0 + noise) break;
      if (step < 1e-12) break;
    }
    out.w = std::move(trial);
    g = std::move(g_trial);
  }
  out.gradient_norm = g.norm();
  out.converged = out.gradient_norm <= tolerance;
  return out;
}

}  // namespace gibbsopt
