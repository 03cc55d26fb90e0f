#include "gibbsopt/sampler.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gibbsopt {

double ArgmaxOracleConfig::failure_probability(std::size_t t) const {
  switch (schedule) {
    case FailureSchedule::exact:
      return 0.0;
    case FailureSchedule::constant:
      if (!(probability >= 0.0 && probability < 1.0)) {
        throw std::invalid_argument("argmax oracle: failure probability must lie in [0, 1)");
      }
      return probability;
    case FailureSchedule::decaying:
      if (eta < 1) throw std::invalid_argument("argmax oracle: eta must be at least 1");
      return 1.0 / (4.0 * std::sqrt(static_cast<double>(t) + static_cast<double>(eta)));
  }
  return 0.0;
}

std::size_t sample_boltzmann(const BoltzmannDistribution& dist, Rng& rng) {
  if (dist.probabilities.empty()) throw std::invalid_argument("sample_boltzmann: empty distribution");
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < dist.probabilities.size(); ++k) {
    if (dist.probabilities[k] <= 0.0) continue;
    cumulative += dist.probabilities[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  // Rounding left the cumulative sum a hair below 1.
  return last_positive;
}

Vector mc_grad_summand(const MinMaxProblem& problem, std::size_t i, const Vector& w, double beta,
                       std::size_t samples, Rng& rng) {
  if (samples == 0) throw std::invalid_argument("mc_grad_summand: need at least one sample");
  const BoltzmannDistribution dist = boltzmann(problem, i, w, beta);
  Vector counts = Vector::Zero(static_cast<Eigen::Index>(problem.label_count()));
  for (std::size_t s = 0; s < samples; ++s) counts(static_cast<Eigen::Index>(sample_boltzmann(dist, rng))) += 1.0;
  return problem.lambda() * w + problem.slopes_of(i) * (counts / static_cast<double>(samples));
}

Vector noisy_grad_summand(const Vector& exact, const NoisyGradientConfig& cfg, Rng& rng) {
  if (!(cfg.theta >= 0.0)) throw std::invalid_argument("noisy_grad_summand: theta must be nonnegative");
  if (cfg.theta == 0.0) return exact;
  const double bound = cfg.theta / 3.0;
  Vector noisy = exact;
  for (Eigen::Index k = 0; k < noisy.size(); ++k) {
    double error = 0.0;
    switch (cfg.shape) {
      case NoiseShape::uniform:
        error = rng.uniform(-bound, bound);
        break;
      case NoiseShape::signed_extremes:
        error = rng.bernoulli(0.5) ? bound : -bound;
        break;
    }
    assert(std::abs(error) <= bound);
    noisy(k) += error;
  }
  return noisy;
}

std::size_t noisy_argmax(std::span<const double> values, double failure_prob, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("noisy_argmax: empty value list");
  if (!(failure_prob >= 0.0 && failure_prob < 1.0)) {
    throw std::invalid_argument("noisy_argmax: failure probability must lie in [0, 1)");
  }
  const std::size_t best = argmax(values);
  if (values.size() == 1 || failure_prob == 0.0) return best;
  if (!rng.bernoulli(failure_prob)) return best;
  const std::size_t wrong = rng.index(values.size() - 1);
  return wrong < best ? wrong : wrong + 1;
}

double gibbs_conditional_up(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                            std::span<const int> spins, std::size_t k, double beta) {
  const double field = local_field(model, features, anchor, spins, k);
  return 1.0 / (1.0 + std::exp(-2.0 * beta * field));
}

void gibbs_sweep_inplace(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                         GibbsChainState& state, Rng& rng) {
  if (state.spins.size() != model.ell) {
    throw std::invalid_argument("gibbs_sweep: chain has " + std::to_string(state.spins.size()) +
                                " spins, model has " + std::to_string(model.ell));
  }
  if (static_cast<std::size_t>(features.size()) != model.ell) {
    throw std::invalid_argument("gibbs_sweep: feature vector length does not match the model");
  }
  if (!(state.beta >= 0.0)) throw std::invalid_argument("gibbs_sweep: beta must be nonnegative");
  for (std::size_t k = 0; k < model.ell; ++k) {
    const double up = gibbs_conditional_up(model, features, anchor, state.spins, k, state.beta);
    state.spins[k] = rng.uniform() < up ? 1 : -1;
  }
  ++state.sweep_count;
}

GibbsChainState gibbs_sweep(const IsingLabelModel& model, const Vector& features,
                            std::optional<std::span<const int>> anchor, GibbsChainState state, Rng& rng) {
  gibbs_sweep_inplace(model, features, anchor.value_or(std::span<const int>{}), state, rng);
  return state;
}

}  // namespace gibbsopt
