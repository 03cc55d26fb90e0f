#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gibbsopt/objective.hpp"
#include "gibbsopt/rng.hpp"
#include "gibbsopt/sampler.hpp"

namespace gibbsopt {

// ---------------------------------------------------------------------------
// Step schedules and projections

enum class ScheduleKind { decay, strong_convex, constant };

/// gamma_t for t = 0, 1, ...
///   decay:         gamma0 / (1 + t c_gamma)
///   strong_convex: eta / (mu (t + eta))
///   constant:      gamma0
/// Factories reject gamma0 <= 0, c_gamma < 0, eta < 1 and mu <= 0.
class StepSchedule {
 public:
  static StepSchedule decay(double gamma0, double c_gamma);
  static StepSchedule strong_convex(unsigned eta, double mu);
  static StepSchedule constant(double gamma);

  double operator()(std::size_t t) const;

  ScheduleKind kind() const { return kind_; }
  double gamma0() const { return gamma0_; }
  double c_gamma() const { return c_gamma_; }
  unsigned eta() const { return eta_; }
  double mu() const { return mu_; }

 private:
  StepSchedule() = default;
  ScheduleKind kind_ = ScheduleKind::constant;
  double gamma0_ = 0.0;
  double c_gamma_ = 0.0;
  unsigned eta_ = 1;
  double mu_ = 0.0;
};

inline double step_size(const StepSchedule& schedule, std::size_t t) { return schedule(t); }

struct Projection {
  enum class Kind { unconstrained, euclidean_ball };
  Kind kind = Kind::unconstrained;
  Vector center;
  double radius = 0.0;

  static Projection none() { return {}; }
  /// Throws std::invalid_argument unless radius > 0.
  static Projection ball(Vector center, double radius);
};

Vector project(const Projection& projection, const Vector& v);

// ---------------------------------------------------------------------------
// Gradient oracles

/// Returns a (stochastic) gradient of the summand g_i at w, regularizer included.
using GradientOracle = std::function<Vector(std::size_t i, const Vector& w)>;
/// Returns a subgradient of g_i at w on iteration t.
using SubgradientOracle = std::function<Vector(std::size_t i, const Vector& w, std::size_t t)>;

/// Gradient of g_i^beta = r + max^beta f_i, either exact, exact plus bounded
/// additive noise, or a Monte Carlo Boltzmann average. Noise for summand i
/// comes from its own child stream of the configured seed.
class SmoothGradientOracle {
 public:
  enum class Mode { exact, noisy, monte_carlo };

  SmoothGradientOracle(const MinMaxProblem& problem, double beta);
  static SmoothGradientOracle noisy(const MinMaxProblem& problem, double beta, NoisyGradientConfig noise);
  static SmoothGradientOracle monte_carlo(const MinMaxProblem& problem, double beta, std::size_t samples,
                                          std::uint64_t seed);

  Vector operator()(std::size_t i, const Vector& w);

  Mode mode() const { return mode_; }
  double beta() const { return beta_; }
  void set_beta(double beta);
  double theta() const { return noise_.theta; }
  void set_theta(double theta);

 private:
  const MinMaxProblem* problem_;
  double beta_;
  Mode mode_ = Mode::exact;
  NoisyGradientConfig noise_;
  std::size_t samples_ = 1;
  std::vector<Rng> streams_;
};

/// lambda w + a_{i,yhat}, where yhat comes from a failure-prone maximization
/// of the pieces of summand i.
class ArgmaxSubgradientOracle {
 public:
  ArgmaxSubgradientOracle(const MinMaxProblem& problem, ArgmaxOracleConfig config);
  Vector operator()(std::size_t i, const Vector& w, std::size_t t);
  std::size_t failures() const { return failures_; }

 private:
  const MinMaxProblem* problem_;
  ArgmaxOracleConfig config_;
  Rng rng_;
  std::size_t failures_ = 0;
};

// ---------------------------------------------------------------------------
// Optimizers

struct IterateState {
  Vector w;
  std::size_t t = 0;
};

/// w <- P(w - gamma_t g_i(w)) for a uniformly drawn summand i. With a
/// subgradient oracle this is SubSGD.
void sgd_step(IterateState& state, std::size_t n, const GradientOracle& oracle, const StepSchedule& schedule,
              const Projection& projection, Rng& rng);

/// Iterate plus polynomial-decay average
///   wbar^{t+1} = t/(t+eta+1) wbar^t + (eta+1)/(t+eta+1) w^{t+1}.
struct AveragedState {
  Vector w;
  Vector w_bar;
  std::size_t t = 0;
  unsigned eta = 1;

  /// Throws std::invalid_argument when eta < 1.
  static AveragedState start(const Vector& w0, unsigned eta);
};

/// One SubSGDP / A-SubSGDP step; the oracle decides whether maximization can fail.
void subsgdp_step(AveragedState& state, std::size_t n, const SubgradientOracle& oracle,
                  const StepSchedule& schedule, const Projection& projection, Rng& rng);

/// SAGA iterate, gradient table and table mean. `anchors` holds the points
/// phi_i at which the stored gradients were taken.
struct SagaState {
  Vector w;
  Eigen::MatrixXd cache;    // D x n
  Eigen::MatrixXd anchors;  // D x n
  Vector cache_avg;
  std::size_t t = 0;
  std::size_t since_resync = 0;

  std::size_t n() const { return static_cast<std::size_t>(cache.cols()); }
};

/// Full pass: phi_i = w0 and cache_i = oracle(i, w0).
SagaState saga_init(const Vector& w0, std::size_t n, const GradientOracle& oracle);

/// Steps between full re-summations of the cache mean.
inline constexpr std::size_t kSagaResyncPeriod = 10000;

/// Update with a given summand j and step gamma. Returns nothing; exposed so
/// expectations over j can be enumerated exactly.
void saga_step_index(SagaState& state, std::size_t j, const GradientOracle& oracle, double gamma,
                     const Projection& projection);

/// Draws j uniformly and applies saga_step_index with gamma_t. Returns j.
std::size_t saga_step(SagaState& state, const GradientOracle& oracle, const StepSchedule& schedule,
                      const Projection& projection, Rng& rng);

// ---------------------------------------------------------------------------
// Inverse-temperature schedule

struct BetaSchedule {
  double beta0 = 1e-7;
  double increment = 1e-8;
  std::size_t period = 10;
};

/// beta + increment when t is a positive multiple of period, else beta.
double beta_schedule_step(double current_beta, std::size_t t, const BetaSchedule& schedule);

// ---------------------------------------------------------------------------
// A-SAGA parameters and their verification

/// Denominator constant of the theta rule: 2/(9L) or 5/(18L).
enum class ThetaConstant { two_ninths, five_eighteenths };

struct AsagaParams {
  double gamma = 0.0;
  double c = 0.0;
  double alpha = 0.0;
  double inv_tau = 0.0;
  double theta = 0.0;
};

/// theta = min{1/sqrt(D), mu d^2 / (2 sqrt(D) (k/L + 2 d))}, then
/// gamma = 1/((1+alpha)(1+theta sqrt(D)) L), c = 2/(n gamma), alpha = 8,
/// 1/tau = min{1/(2n), gamma mu / 2}. Throws std::invalid_argument when
/// L <= 0, mu <= 0, n == 0, D == 0 or w_dist < 0.
AsagaParams asaga_params(const ProblemBounds& bounds, std::size_t n, double w_dist, std::size_t dim,
                         ThetaConstant constant = ThetaConstant::two_ninths);

/// Error-free SAGA parameterization: gamma = 1/(2(mu n + L)),
/// c = 1/(2 gamma (1 - gamma mu) n), alpha = (2 mu n + L)/L, 1/tau = gamma mu.
AsagaParams saga_reference_params(const ProblemBounds& bounds, std::size_t n);

struct AsagaInequalityReport {
  std::array<double, 4> lhs{};
  std::array<bool, 4> satisfied{};
  bool all() const { return satisfied[0] && satisfied[1] && satisfied[2] && satisfied[3]; }
};

/// Evaluates the four sufficient conditions of the A-SAGA contraction proof:
///   (1) 1/n - 2 c gamma ((L-mu)/L + gamma mu alpha delta) <= 0
///   (2) 1/tau + 2 (1 + 1/alpha) delta c gamma^2 L - 1/n <= 0,
///       with 2 (1 + 1/alpha) delta c gamma^2 L - 1/n < 0
///   (3) (1/tau - gamma mu) d^2 + 2 gamma^2 theta sqrt(D) + gamma^2 theta^2 D
///       + 2 gamma theta sqrt(D) d <= 0, with 1/tau < gamma mu when theta > 0
///   (4) (1 + alpha) gamma delta - 1/L <= 0
/// where delta = 1 + theta sqrt(D) and d = |w - w*|. Non-strict comparisons
/// allow a relative rounding slack of 1e-12.
AsagaInequalityReport verify_asaga_inequalities(const AsagaParams& params, const ProblemBounds& bounds,
                                                std::size_t n, std::size_t dim, double w_dist);

/// T = 1/n sum g_i(phi_i) - g(w*) - 1/n sum <g_i'(w*), phi_i - w*> + c |w - w*|^2
/// with g_i = g_i^beta.
double lyapunov(const SagaState& state, const MinMaxProblem& problem, double beta, const Vector& w_star, double c);

// ---------------------------------------------------------------------------
// Polynomial-decay averaging in closed form

/// Weights p(t, T, eta), t = 0..T, with wbar^T = sum_t p(t, T, eta) w^t:
/// p = P_t / sigma(T), P_t = t (t+1) ... (t+eta-1), sigma(T) = sum_t P_t.
/// Computed from exact integer ratios whenever they fit in 128 bits.
std::vector<double> averaging_weights(std::size_t T, unsigned eta);

/// Closed-form average of the iterates w^0..w^T.
Vector closed_form_average(std::span<const Vector> iterates, unsigned eta);

// ---------------------------------------------------------------------------
// Reference solutions

struct ReferenceSolution {
  Vector w;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizer of f^beta by damped Newton on the exact full-batch gradient and
/// Hessian, stopped once |grad f^beta| <= tolerance.
ReferenceSolution reference_solve(const MinMaxProblem& problem, double beta, const Vector& w0,
                                  double tolerance = 1e-10, std::size_t max_iterations = 500);

}  // namespace gibbsopt
