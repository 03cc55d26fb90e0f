#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsopt/objective.hpp"
#include "gibbsopt/optim.hpp"

namespace gibbsopt {

// ---------------------------------------------------------------------------
// Problem generation

enum class Distribution { cauchy, normal, uniform };

/// cauchy(location, scale), normal(mean = location, sd = scale), or
/// uniform on [location, location + scale].
struct DistributionSpec {
  Distribution kind = Distribution::cauchy;
  double location = 0.0;
  double scale = 1.0;

  double draw(Rng& rng) const;
};

struct ProblemSpec {
  std::size_t D = 10;
  std::size_t n = 200;
  std::size_t label_count = 100;
  double lambda = 2.0;
  DistributionSpec slopes;
  DistributionSpec offsets;
  double shift_lo = 0.0;
  double shift_hi = 10000.0;

  /// Throws std::invalid_argument on empty sizes, lambda < 0, a
  /// nonpositive scale or shift_lo > shift_hi.
  void validate() const;
};

/// Draws, in this order, every (a_{i,y}, b_{i,y}) for i, y ascending, then
/// every b'_i. Deterministic per seed.
MinMaxProblem generate_problem(const ProblemSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Algorithms and runs

enum class Algorithm { sgd, subsgd, subsgdp, saga, beta_sched_saga, asaga, asubsgdp };

std::string_view to_string(Algorithm algorithm);
/// Throws std::invalid_argument for unknown names.
Algorithm algorithm_from_string(std::string_view name);
/// Whether the algorithm works on f^beta (and so has a beta hyperparameter).
bool uses_beta(Algorithm algorithm);
bool uses_eta(Algorithm algorithm);

/// Hyperparameters of one grid cell. Steps follow gamma_t = gamma0/(1 + t c_gamma)
/// except for A-SubSGDP, which uses eta/(lambda (t + eta)); gamma0 = 0 freezes
/// the iterate. `theta` is the additive gradient error bound of A-SAGA and
/// `mc_samples > 0` replaces exact Boltzmann expectations by that many draws.
struct Hyperparams {
  double beta = 0.0;
  double gamma0 = 0.0;
  double c_gamma = 0.0;
  unsigned eta = 1;
  BetaSchedule beta_schedule;
  double theta = 0.0;
  std::size_t mc_samples = 0;
};

struct RunTrace {
  /// f(w^t) for t = 0..iterations (f of the average for the SubSGDP family).
  std::vector<double> objective;
  std::uint64_t seed = 0;
  bool diverged = false;
};

/// Values above this multiple of |f(w^0)| count as divergence.
inline constexpr double kDivergenceFactor = 1e12;

/// Runs one optimizer from w0. Never throws on numeric blow-up: the trace is
/// flagged diverged and padded with +inf. Index draws come from
/// Rng::stream(seed, 0); noisy or sampled gradients from per-summand streams
/// of splitmix64(seed ^ 1); argmax failures from Rng(splitmix64(seed ^ 2)).
RunTrace run_once(const MinMaxProblem& problem, Algorithm algorithm, const Hyperparams& params,
                  std::size_t iterations, std::uint64_t seed, const Vector& w0);

// ---------------------------------------------------------------------------
// Metrics

struct UtilityReport {
  double total_descent = 0.0;
  double absolute_ascent = 0.0;
  double utility = 0.0;
  double mean_objective = 0.0;
  /// False when the total descent is not positive or any trace diverged.
  bool defined = false;
};

/// total descent = f(w^0) of the first trace minus the minimum over all
/// traces and iterations; absolute ascent = sum of positive consecutive
/// increments; mean_objective averages iterations 1..T of every trace (the
/// initial value only when T = 0). Throws on empty input or unequal lengths.
UtilityReport utility(const std::vector<RunTrace>& traces);

/// Defined and strictly below the threshold.
bool passes_filter(const UtilityReport& report, double threshold);

// ---------------------------------------------------------------------------
// Experiments and grid search

struct OptimizerGrid {
  Algorithm algorithm = Algorithm::saga;
  std::vector<double> beta;  // ignored unless uses_beta
  std::vector<double> gamma0;
  std::vector<double> c_gamma;
  std::vector<unsigned> eta;  // ignored unless uses_eta
  BetaSchedule beta_schedule;
  double theta = 0.0;
  std::size_t mc_samples = 0;
};

/// Decade grids: beta, gamma0 in 1e-7..1e0, c_gamma in {0} u 1e-4..1e2, eta in 1..7.
OptimizerGrid decade_grid(Algorithm algorithm);

/// The tuned settings of the original experiment for the five compared methods.
Hyperparams tuned_defaults(Algorithm algorithm);

struct ExperimentConfig {
  ProblemSpec problem;
  std::uint64_t problem_seed = 0;
  /// Draw a fresh problem for every seed instead of sharing one.
  bool regenerate_per_seed = false;
  /// Empty means w0 = w0_fill * ones(D).
  std::vector<double> w0;
  double w0_fill = 10.0;
  std::size_t iterations = 1000;
  std::size_t seeds = 20;
  std::uint64_t seed_base = 0;
  double utility_threshold = 0.01;
  std::size_t workers = 1;
  std::vector<OptimizerGrid> optimizers;

  void validate() const;
  Vector initial_point() const;
};

/// Throws std::invalid_argument with a description of the first problem.
ExperimentConfig experiment_from_json(std::string_view text);
ExperimentConfig load_experiment(const std::filesystem::path& path);
ProblemSpec problem_spec_from_json(std::string_view text);
Hyperparams hyperparams_from_json(std::string_view text);

struct CellResult {
  Algorithm algorithm = Algorithm::saga;
  Hyperparams params;
  UtilityReport report;
  bool passed = false;
  std::vector<RunTrace> traces;  // kept for winners only
};

struct Winner {
  Algorithm algorithm = Algorithm::saga;
  /// Index into GridResult::cells, or empty when no cell passed.
  std::optional<std::size_t> cell;
};

struct GridResult {
  std::vector<CellResult> cells;
  std::vector<Winner> winners;
  bool all_stable() const;
};

/// Cells of one grid in lexicographic (beta, gamma0, c_gamma, eta) order.
std::vector<Hyperparams> expand_grid(const OptimizerGrid& grid);

/// Evaluates every cell over all seeds on a pool of config.workers threads.
/// The winner per algorithm minimizes mean_objective among cells passing the
/// utility filter; ties go to the earlier cell in expand_grid order.
GridResult grid_search(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Reports

struct LabeledTrace {
  std::string algorithm;
  RunTrace trace;
};

/// Doubles are written in shortest round-trip form.
std::string traces_to_csv(const std::vector<LabeledTrace>& traces);
/// Throws std::invalid_argument on malformed rows.
std::vector<LabeledTrace> traces_from_csv(std::string_view text);
std::string grid_to_csv(const GridResult& result);
std::string winners_to_csv(const GridResult& result);
/// Per-algorithm mean line and one-standard-deviation band over seeds.
std::string traces_to_svg(const std::vector<LabeledTrace>& traces, bool log_y = false);

/// traces.csv, grid.csv, winners.csv and fig.svg in out_dir.
void write_report(const GridResult& result, const std::filesystem::path& out_dir);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Shortest round-trip decimal form ("inf", "-inf", "nan" for non-finite).
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace gibbsopt
