#include "gibbsopt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>

namespace gibbsopt {

double DistributionSpec::draw(Rng& rng) const {
  switch (kind) {
    case Distribution::cauchy: return rng.cauchy(location, scale);
    case Distribution::normal: return location + scale * rng.normal();
    case Distribution::uniform: return rng.uniform(location, location + scale);
  }
  return 0.0;
}

void ProblemSpec::validate() const {
  if (D == 0 || n == 0 || label_count == 0) throw std::invalid_argument("problem spec: D, n and label_count must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("problem spec: lambda must be nonnegative");
  if (!(slopes.scale > 0.0) || !(offsets.scale > 0.0)) throw std::invalid_argument("problem spec: scales must be positive");
  if (!(shift_lo <= shift_hi)) throw std::invalid_argument("problem spec: shift range is empty");
}

MinMaxProblem generate_problem(const ProblemSpec& spec, std::uint64_t seed) {
  spec.validate();
  MinMaxProblem p(spec.n, spec.D, spec.label_count, spec.lambda);
  Rng rng(seed);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t y = 0; y < spec.label_count; ++y) {
      auto a = p.slope(i, y);
      for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = spec.slopes.draw(rng);
      p.offset(i, y) = spec.offsets.draw(rng);
    }
  }
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto b = p.shift(i);
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = rng.uniform(spec.shift_lo, spec.shift_hi);
  }
  return p;
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::subsgd: return "subsgd";
    case Algorithm::subsgdp: return "subsgdp";
    case Algorithm::saga: return "saga";
    case Algorithm::beta_sched_saga: return "beta-sched-saga";
    case Algorithm::asaga: return "asaga";
    case Algorithm::asubsgdp: return "asubsgdp";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (Algorithm a : {Algorithm::sgd, Algorithm::subsgd, Algorithm::subsgdp, Algorithm::saga,
                      Algorithm::beta_sched_saga, Algorithm::asaga, Algorithm::asubsgdp}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

bool uses_beta(Algorithm a) { return a == Algorithm::sgd || a == Algorithm::saga || a == Algorithm::asaga; }

bool uses_eta(Algorithm a) { return a == Algorithm::subsgdp || a == Algorithm::asubsgdp; }

namespace {

bool uses_gamma(Algorithm a) { return a != Algorithm::asubsgdp; }

void check_params(const MinMaxProblem& problem, Algorithm algorithm, const Hyperparams& p) {
  if (uses_beta(algorithm) && !(p.beta > 0.0)) throw std::invalid_argument("run: beta must be positive");
  if (algorithm == Algorithm::beta_sched_saga) {
    if (!(p.beta_schedule.beta0 > 0.0)) throw std::invalid_argument("run: beta0 must be positive");
    if (!(p.beta_schedule.increment >= 0.0)) throw std::invalid_argument("run: beta increment must be nonnegative");
    if (p.beta_schedule.period < 1) throw std::invalid_argument("run: beta period must be at least 1");
  }
  if (uses_gamma(algorithm)) {
    if (!(p.gamma0 >= 0.0) || !std::isfinite(p.gamma0)) throw std::invalid_argument("run: gamma0 must be nonnegative");
    if (!(p.c_gamma >= 0.0) || !std::isfinite(p.c_gamma)) throw std::invalid_argument("run: c_gamma must be nonnegative");
  }
  if (uses_eta(algorithm) && p.eta < 1) throw std::invalid_argument("run: eta must be at least 1");
  if (algorithm == Algorithm::asubsgdp && !(problem.lambda() > 0.0)) {
    throw std::invalid_argument("run: A-SubSGDP needs lambda > 0 for its step schedule");
  }
  if (!(p.theta >= 0.0)) throw std::invalid_argument("run: theta must be nonnegative");
}

// Records f(w^t) and watches for divergence.
class TraceRecorder {
 public:
  TraceRecorder(RunTrace& trace, double f0, std::size_t iterations) : trace_(trace) {
    trace_.objective.reserve(iterations + 1);
    trace_.objective.push_back(f0);
    limit_ = kDivergenceFactor * (f0 != 0.0 ? std::abs(f0) : 1.0);
    trace_.diverged = !std::isfinite(f0);
  }

  bool diverged() const { return trace_.diverged; }

  void record(double value) {
    // From the first bad value on, the trace reads +inf.
    if (!std::isfinite(value) || value > limit_) {
      trace_.diverged = true;
      return;
    }
    trace_.objective.push_back(value);
  }

  void finish(std::size_t iterations) {
    trace_.objective.resize(iterations + 1, std::numeric_limits<double>::infinity());
  }

 private:
  RunTrace& trace_;
  double limit_ = 0.0;
};

SmoothGradientOracle make_smooth_oracle(const MinMaxProblem& problem, Algorithm algorithm, const Hyperparams& p,
                                        double beta, std::uint64_t noise_seed) {
  if (algorithm == Algorithm::asaga) {
    return SmoothGradientOracle::noisy(problem, beta, NoisyGradientConfig{p.theta, NoiseShape::uniform, noise_seed});
  }
  if (p.mc_samples > 0) return SmoothGradientOracle::monte_carlo(problem, beta, p.mc_samples, noise_seed);
  return SmoothGradientOracle(problem, beta);
}

}  // namespace

RunTrace run_once(const MinMaxProblem& problem, Algorithm algorithm, const Hyperparams& params,
                  std::size_t iterations, std::uint64_t seed, const Vector& w0) {
  problem.check_point(w0);
  check_params(problem, algorithm, params);

  RunTrace trace;
  trace.seed = seed;
  TraceRecorder rec(trace, eval_f(problem, w0), iterations);
  const std::size_t n = problem.n();
  Rng rng = Rng::stream(seed, 0);
  const std::uint64_t noise_seed = splitmix64(seed ^ 1);
  const std::uint64_t argmax_seed = splitmix64(seed ^ 2);

  if (uses_gamma(algorithm) && params.gamma0 == 0.0) {
    // Zero step: every iterate (and average) stays at w0.
    for (std::size_t t = 0; t < iterations && !rec.diverged(); ++t) rec.record(trace.objective.front());
    rec.finish(iterations);
    return trace;
  }
  const Projection none = Projection::none();

  switch (algorithm) {
    case Algorithm::sgd:
    case Algorithm::subsgd: {
      const StepSchedule schedule = StepSchedule::decay(params.gamma0, params.c_gamma);
      SmoothGradientOracle smooth = make_smooth_oracle(problem, Algorithm::sgd,
                                                       params, algorithm == Algorithm::sgd ? params.beta : 1.0,
                                                       noise_seed);
      ArgmaxSubgradientOracle sub(problem, ArgmaxOracleConfig{FailureSchedule::exact, 0.0, 1, argmax_seed});
      GradientOracle oracle;
      if (algorithm == Algorithm::sgd) {
        oracle = std::ref(smooth);
      } else {
        oracle = [&sub](std::size_t i, const Vector& w) { return sub(i, w, 0); };
      }
      IterateState state{w0, 0};
      for (std::size_t t = 0; t < iterations && !rec.diverged(); ++t) {
        sgd_step(state, n, oracle, schedule, none, rng);
        rec.record(eval_f(problem, state.w));
      }
      break;
    }
    case Algorithm::subsgdp:
    case Algorithm::asubsgdp: {
      const bool failing = algorithm == Algorithm::asubsgdp;
      const StepSchedule schedule = failing ? StepSchedule::strong_convex(params.eta, problem.lambda())
                                            : StepSchedule::decay(params.gamma0, params.c_gamma);
      ArgmaxOracleConfig cfg{failing ? FailureSchedule::decaying : FailureSchedule::exact, 0.0, params.eta, argmax_seed};
      ArgmaxSubgradientOracle sub(problem, cfg);
      AveragedState state = AveragedState::start(w0, params.eta);
      for (std::size_t t = 0; t < iterations && !rec.diverged(); ++t) {
        subsgdp_step(state, n, std::ref(sub), schedule, none, rng);
        rec.record(eval_f(problem, state.w_bar));
      }
      break;
    }
    case Algorithm::saga:
    case Algorithm::asaga:
    case Algorithm::beta_sched_saga: {
      const StepSchedule schedule = StepSchedule::decay(params.gamma0, params.c_gamma);
      const bool scheduled = algorithm == Algorithm::beta_sched_saga;
      double beta = scheduled ? params.beta_schedule.beta0 : params.beta;
      SmoothGradientOracle oracle = make_smooth_oracle(problem, algorithm, params, beta, noise_seed);
      const GradientOracle fn = std::ref(oracle);
      SagaState state = saga_init(w0, n, fn);
      for (std::size_t t = 0; t < iterations && !rec.diverged(); ++t) {
        if (scheduled) {
          beta = beta_schedule_step(beta, t + 1, params.beta_schedule);
          oracle.set_beta(beta);
        }
        saga_step(state, fn, schedule, none, rng);
        rec.record(eval_f(problem, state.w));
      }
      break;
    }
  }
  rec.finish(iterations);
  return trace;
}

UtilityReport utility(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("utility: no traces");
  const std::size_t len = traces.front().objective.size();
  if (len == 0) throw std::invalid_argument("utility: empty trace");
  for (const auto& tr : traces) {
    if (tr.objective.size() != len) throw std::invalid_argument("utility: traces differ in length");
  }
  UtilityReport r;
  const double f0 = traces.front().objective.front();
  double best = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  bool finite = true;
  for (const auto& tr : traces) {
    const auto& v = tr.objective;
    finite = finite && !tr.diverged;
    for (std::size_t t = 0; t < len; ++t) {
      finite = finite && std::isfinite(v[t]);
      best = std::min(best, v[t]);
      if (t > 0) r.absolute_ascent += std::max(0.0, v[t] - v[t - 1]);
      if (t > 0 || len == 1) {
        sum += v[t];
        ++count;
      }
    }
  }
  r.total_descent = f0 - best;
  r.mean_objective = sum / static_cast<double>(count);
  r.defined = finite && r.total_descent > 0.0;
  r.utility = r.defined ? r.absolute_ascent / r.total_descent : std::numeric_limits<double>::quiet_NaN();
  return r;
}

bool passes_filter(const UtilityReport& report, double threshold) {
  return report.defined && report.utility < threshold;
}

// ---------------------------------------------------------------------------
// Grids

namespace {

const std::vector<double>& decades_7_to_0() {
  static const std::vector<double> v{1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0};
  return v;
}

}  // namespace

OptimizerGrid decade_grid(Algorithm algorithm) {
  OptimizerGrid g;
  g.algorithm = algorithm;
  g.beta = decades_7_to_0();
  g.gamma0 = decades_7_to_0();
  g.c_gamma = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2};
  g.eta = {1, 2, 3, 4, 5, 6, 7};
  return g;
}

Hyperparams tuned_defaults(Algorithm algorithm) {
  Hyperparams p;
  switch (algorithm) {
    case Algorithm::sgd:
      p.beta = 1e-4;
      p.gamma0 = 1e-2;
      p.c_gamma = 10.0;
      break;
    case Algorithm::subsgd:
      p.gamma0 = 1e-2;
      p.c_gamma = 10.0;
      break;
    case Algorithm::subsgdp:
    case Algorithm::asubsgdp:
      p.gamma0 = 1e-3;
      p.c_gamma = 0.0;
      p.eta = 5;
      break;
    case Algorithm::saga:
    case Algorithm::asaga:
      p.beta = 1e-4;
      p.gamma0 = 1e-3;
      p.c_gamma = 0.0;
      break;
    case Algorithm::beta_sched_saga:
      p.gamma0 = 1e-3;
      p.c_gamma = 0.0;
      p.beta_schedule = BetaSchedule{1e-7, 1e-8, 10};
      break;
  }
  return p;
}

std::vector<Hyperparams> expand_grid(const OptimizerGrid& grid) {
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const Algorithm a = grid.algorithm;
  const std::vector<double> betas = uses_beta(a) ? sorted(grid.beta) : std::vector<double>{0.0};
  const std::vector<double> gammas = uses_gamma(a) ? sorted(grid.gamma0) : std::vector<double>{0.0};
  const std::vector<double> cgs = uses_gamma(a) ? sorted(grid.c_gamma) : std::vector<double>{0.0};
  std::vector<unsigned> etas{1};
  if (uses_eta(a)) {
    etas = grid.eta;
    std::sort(etas.begin(), etas.end());
    etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  }
  std::vector<Hyperparams> cells;
  for (double b : betas) {
    for (double g : gammas) {
      for (double c : cgs) {
        for (unsigned e : etas) {
          Hyperparams p;
          p.beta = b;
          p.gamma0 = g;
          p.c_gamma = c;
          p.eta = e;
          p.beta_schedule = grid.beta_schedule;
          p.theta = grid.theta;
          p.mc_samples = grid.mc_samples;
          cells.push_back(p);
        }
      }
    }
  }
  return cells;
}

void ExperimentConfig::validate() const {
  problem.validate();
  if (iterations < 1) throw std::invalid_argument("experiment: iterations must be at least 1");
  if (seeds < 1) throw std::invalid_argument("experiment: seeds must be at least 1");
  if (!(utility_threshold > 0.0)) throw std::invalid_argument("experiment: utility_threshold must be positive");
  if (!w0.empty() && w0.size() != problem.D) throw std::invalid_argument("experiment: w0 must have D entries");
  if (optimizers.empty()) throw std::invalid_argument("experiment: no optimizers configured");
  for (const auto& g : optimizers) {
    const std::string name(to_string(g.algorithm));
    if (uses_beta(g.algorithm) && g.beta.empty()) throw std::invalid_argument("experiment: " + name + " needs a beta grid");
    if (uses_gamma(g.algorithm) && (g.gamma0.empty() || g.c_gamma.empty())) {
      throw std::invalid_argument("experiment: " + name + " needs gamma0 and c_gamma grids");
    }
    if (uses_eta(g.algorithm) && g.eta.empty()) throw std::invalid_argument("experiment: " + name + " needs an eta grid");
  }
}

Vector ExperimentConfig::initial_point() const {
  if (w0.empty()) return Vector::Constant(static_cast<Eigen::Index>(problem.D), w0_fill);
  return Eigen::Map<const Vector>(w0.data(), static_cast<Eigen::Index>(w0.size()));
}

bool GridResult::all_stable() const {
  return std::all_of(winners.begin(), winners.end(), [](const Winner& w) { return w.cell.has_value(); });
}

GridResult grid_search(const ExperimentConfig& config) {
  config.validate();
  const Vector w0 = config.initial_point();

  std::vector<MinMaxProblem> problems;
  if (config.regenerate_per_seed) {
    for (std::size_t k = 0; k < config.seeds; ++k) {
      problems.push_back(generate_problem(config.problem, config.problem_seed ^ splitmix64(config.seed_base + k)));
    }
  } else {
    problems.push_back(generate_problem(config.problem, config.problem_seed));
  }

  GridResult result;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // cell range per optimizer
  for (const auto& grid : config.optimizers) {
    const std::size_t begin = result.cells.size();
    for (const Hyperparams& p : expand_grid(grid)) {
      CellResult cell;
      cell.algorithm = grid.algorithm;
      cell.params = p;
      cell.traces.resize(config.seeds);
      result.cells.push_back(std::move(cell));
    }
    ranges.emplace_back(begin, result.cells.size());
  }

  const std::size_t tasks = result.cells.size() * config.seeds;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const std::size_t c = task / config.seeds;
      const std::size_t k = task % config.seeds;
      CellResult& cell = result.cells[c];
      const MinMaxProblem& problem = problems[config.regenerate_per_seed ? k : 0];
      try {
        cell.traces[k] = run_once(problem, cell.algorithm, cell.params, config.iterations, config.seed_base + k, w0);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, tasks));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (auto& cell : result.cells) {
    cell.report = utility(cell.traces);
    cell.passed = passes_filter(cell.report, config.utility_threshold);
  }
  for (std::size_t g = 0; g < config.optimizers.size(); ++g) {
    Winner w;
    w.algorithm = config.optimizers[g].algorithm;
    for (std::size_t c = ranges[g].first; c < ranges[g].second; ++c) {
      const CellResult& cell = result.cells[c];
      if (!cell.passed) continue;
      if (!w.cell || cell.report.mean_objective < result.cells[*w.cell].report.mean_objective) w.cell = c;
    }
    result.winners.push_back(w);
  }
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const bool winner = std::any_of(result.winners.begin(), result.winners.end(),
                                    [c](const Winner& w) { return w.cell == c; });
    if (!winner) result.cells[c].traces.clear();
  }
  return result;
}

}  // namespace gibbsopt
