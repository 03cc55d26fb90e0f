#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "gibbsopt/ising.hpp"
#include "gibbsopt/objective.hpp"
#include "gibbsopt/rng.hpp"

namespace gibbsopt {

/// Shape of the additive gradient error.
enum class NoiseShape {
  uniform,          // each coordinate uniform on [-theta/3, theta/3]
  signed_extremes,  // each coordinate +-theta/3 with equal probability
};

/// Classical stand-in for an approximate Gibbs-sampled gradient: every
/// coordinate carries an additive error of magnitude at most theta/3.
struct NoisyGradientConfig {
  double theta = 0.0;
  NoiseShape shape = NoiseShape::uniform;
  std::uint64_t seed = 0;
};

enum class FailureSchedule {
  exact,         // never fails
  constant,      // fails with a fixed probability
  decaying,      // p_t = 1 / (4 sqrt(t + eta))
};

/// Failure-prone maximization oracle, standing in for quantum minimum finding.
struct ArgmaxOracleConfig {
  FailureSchedule schedule = FailureSchedule::exact;
  double probability = 0.0;  // used by FailureSchedule::constant
  unsigned eta = 1;
  std::uint64_t seed = 0;

  /// Failure probability at iteration t; always in [0, 1).
  double failure_probability(std::size_t t) const;
};

struct GibbsChainState {
  Label spins;
  std::size_t sweep_count = 0;
  double beta = 1.0;
};

/// Inverse-CDF draw from an exact distribution.
std::size_t sample_boltzmann(const BoltzmannDistribution& dist, Rng& rng);

/// Monte Carlo estimate of grad g_i^beta(w): lambda w plus the mean slope over
/// `samples` labels drawn from the Boltzmann distribution of summand i.
Vector mc_grad_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta,
                       std::size_t samples, Rng& rng);

/// exact + Upsilon with |Upsilon_k| <= theta/3. theta == 0 returns `exact`
/// untouched.
Vector noisy_grad_summand(const Vector& exact, const NoisyGradientConfig& cfg, Rng& rng);

/// Exact argmax with probability 1 - failure_prob; otherwise a uniformly
/// chosen label other than the argmax.
std::size_t noisy_argmax(std::span<const double> values, double failure_prob, Rng& rng);

/// One systematic-scan sweep: each spin resampled once, in index order, from
/// its conditional under exp(beta [s(x, y) + Delta(y, anchor)]) (anchor term
/// only when `anchor` is set). Uses `state.beta` as the inverse temperature.
GibbsChainState gibbs_sweep(const IsingLabelModel& model, const Vector& features,
                            std::optional<std::span<const int>> anchor, GibbsChainState state, Rng& rng);

/// In-place variant used by the inner loops.
void gibbs_sweep_inplace(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                         GibbsChainState& state, Rng& rng);

/// Conditional probability P(y_k = +1 | rest) under the chain's target.
double gibbs_conditional_up(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                            std::span<const int> spins, std::size_t k, double beta);

}  // namespace gibbsopt
