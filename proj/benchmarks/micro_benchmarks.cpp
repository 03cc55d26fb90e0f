#include <benchmark/benchmark.h>

#include "gibbsopt/bench.hpp"
#include "gibbsopt/objective.hpp"
#include "gibbsopt/optim.hpp"
#include "gibbsopt/sampler.hpp"
#include "gibbsopt/structpred.hpp"

namespace {

using namespace gibbsopt;

MinMaxProblem default_problem() {
  ProblemSpec spec;  // D=10, n=200, |Y|=100, lambda=2
  return generate_problem(spec, 7);
}

void BM_EvalF(benchmark::State& state) {
  const MinMaxProblem p = default_problem();
  const Vector w = Vector::Constant(10, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(eval_f(p, w));
}
BENCHMARK(BM_EvalF);

void BM_GradFBeta(benchmark::State& state) {
  const MinMaxProblem p = default_problem();
  const Vector w = Vector::Constant(10, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(grad_f_beta(p, w, 1e-4));
}
BENCHMARK(BM_GradFBeta);

void BM_SagaStep(benchmark::State& state) {
  const MinMaxProblem p = default_problem();
  SmoothGradientOracle oracle(p, 1e-4);
  const GradientOracle fn = std::ref(oracle);
  SagaState s = saga_init(Vector::Constant(10, 10.0), p.n(), fn);
  const StepSchedule schedule = StepSchedule::constant(1e-3);
  Rng rng(1);
  for (auto _ : state) saga_step(s, fn, schedule, Projection::none(), rng);
}
BENCHMARK(BM_SagaStep);

void BM_GibbsSweep(benchmark::State& state) {
  const auto ell = static_cast<std::size_t>(state.range(0));
  IsingLabelModel model(ell, 1.0);
  Rng init(3);
  for (Eigen::Index k = 0; k < model.theta1.size(); ++k) model.theta1(k) = init.normal();
  for (Eigen::Index k = 0; k < model.theta3.size(); ++k) model.theta3(k) = init.normal();
  const Vector features = Vector::Zero(static_cast<Eigen::Index>(ell));
  GibbsChainState chain{Label(ell, 1), 0, 1.0};
  Rng rng(4);
  for (auto _ : state) gibbs_sweep_inplace(model, features, {}, chain, rng);
}
BENCHMARK(BM_GibbsSweep)->Arg(8)->Arg(38);

void BM_ExactClGradient(benchmark::State& state) {
  const std::size_t ell = 10;
  IsingLabelModel model(ell, 1.0);
  Rng init(5);
  Vector params = model.parameters();
  for (Eigen::Index k = 0; k < params.size(); ++k) params(k) = 0.3 * init.normal();
  model.set_parameters(params);
  std::vector<LabeledExample> data{{Vector::Constant(ell, 0.5), Label(ell, 1)}};
  const ObjectiveSpec spec{ObjectiveKind::conditional_likelihood, 1.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(objective_grad(spec, model, data));
}
BENCHMARK(BM_ExactClGradient);

}  // namespace

BENCHMARK_MAIN();
