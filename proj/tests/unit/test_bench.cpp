#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "gibbsopt/bench.hpp"
#include "gibbsopt/problem_io.hpp"
#include "oracles.hpp"

using namespace gibbsopt;

namespace {

RunTrace trace(std::vector<double> v, std::uint64_t seed = 0) {
  RunTrace t;
  t.objective = std::move(v);
  t.seed = seed;
  return t;
}

ProblemSpec small_spec() {
  ProblemSpec s;
  s.D = 3;
  s.n = 8;
  s.label_count = 5;
  s.lambda = 2.0;
  s.shift_hi = 10.0;
  return s;
}

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.problem = small_spec();
  c.problem_seed = 5;
  c.iterations = 50;
  c.seeds = 3;
  c.w0_fill = 10.0;
  return c;
}

}  // namespace

TEST(GenerateProblem, DefaultShapeAndDeterminism) {
  const ProblemSpec spec;
  EXPECT_EQ(spec.D, 10u);
  EXPECT_EQ(spec.n, 200u);
  EXPECT_EQ(spec.label_count, 100u);
  EXPECT_EQ(spec.lambda, 2.0);
  const auto a = generate_problem(spec, 3);
  EXPECT_EQ(a.slopes().rows(), 10);
  EXPECT_EQ(a.slopes().cols(), 200 * 100);
  EXPECT_EQ(problem_to_json(a), problem_to_json(generate_problem(spec, 3)));
  EXPECT_NE(problem_to_json(a), problem_to_json(generate_problem(spec, 4)));
  EXPECT_GE(a.shifts().minCoeff(), 0.0);
  EXPECT_LE(a.shifts().maxCoeff(), 10000.0);
}

TEST(GenerateProblem, CauchyCoefficients) {
  ProblemSpec spec;
  spec.D = 1;
  spec.n = 1000;
  spec.label_count = 100;
  const auto p = generate_problem(spec, 9);
  std::vector<double> v(p.slopes().data(), p.slopes().data() + p.slopes().size());
  ASSERT_EQ(v.size(), 100000u);
  std::sort(v.begin(), v.end());
  EXPECT_NEAR(v[50000], 0.0, 0.02);
  EXPECT_NEAR(v[75000] - v[25000], 2.0, 0.05);
}

TEST(GenerateProblem, RejectsBadSpecs) {
  ProblemSpec s = small_spec();
  s.n = 0;
  EXPECT_THROW(generate_problem(s, 0), std::invalid_argument);
  s = small_spec();
  s.slopes.scale = 0.0;
  EXPECT_THROW(generate_problem(s, 0), std::invalid_argument);
}

TEST(RunOnce, Examples) {
  const auto p = generate_problem(small_spec(), 1);
  const Vector w0 = Vector::Constant(3, 10.0);
  for (Algorithm a : {Algorithm::sgd, Algorithm::subsgd, Algorithm::subsgdp, Algorithm::saga,
                      Algorithm::beta_sched_saga, Algorithm::asaga, Algorithm::asubsgdp}) {
    Hyperparams h = tuned_defaults(a);
    const auto zero = run_once(p, a, h, 0, 1, w0);
    ASSERT_EQ(zero.objective.size(), 1u) << to_string(a);
    EXPECT_EQ(zero.objective[0], eval_f(p, w0));

    const auto x = run_once(p, a, h, 40, 7, w0);
    const auto y = run_once(p, a, h, 40, 7, w0);
    EXPECT_EQ(x.objective.size(), 41u);
    EXPECT_EQ(x.objective, y.objective) << to_string(a);
    EXPECT_FALSE(x.diverged);
  }
  Hyperparams frozen = tuned_defaults(Algorithm::saga);
  frozen.gamma0 = 0.0;
  const auto flat = run_once(p, Algorithm::saga, frozen, 30, 2, w0);
  EXPECT_EQ(flat.objective, std::vector<double>(31, eval_f(p, w0)));
}

TEST(RunOnce, SeedsChangeTheIndexStream) {
  const auto p = generate_problem(small_spec(), 1);
  const Vector w0 = Vector::Constant(3, 10.0);
  const Hyperparams h{1.0, 0.05, 0.0};
  EXPECT_NE(run_once(p, Algorithm::sgd, h, 20, 1, w0).objective, run_once(p, Algorithm::sgd, h, 20, 2, w0).objective);
}

TEST(RunOnce, SubsgdpRecordsTheAverage) {
  const auto p = generate_problem(small_spec(), 2);
  const Vector w0 = Vector::Constant(3, 10.0);
  Hyperparams h;
  h.gamma0 = 0.01;
  h.eta = 3;
  const auto tr = run_once(p, Algorithm::subsgdp, h, 25, 4, w0);
  Rng rng = Rng::stream(4, 0);
  ArgmaxSubgradientOracle sub(p, {});
  auto s = AveragedState::start(w0, 3);
  for (std::size_t t = 0; t < 25; ++t) {
    subsgdp_step(s, p.n(), std::ref(sub), StepSchedule::decay(0.01, 0.0), Projection::none(), rng);
    EXPECT_EQ(tr.objective[t + 1], eval_f(p, s.w_bar));
  }
}

TEST(RunOnce, DivergenceIsFlaggedAndPadded) {
  const auto p = generate_problem(small_spec(), 3);
  Hyperparams h;
  h.beta = 1.0;
  h.gamma0 = 1e6;
  const auto tr = run_once(p, Algorithm::sgd, h, 20, 1, Vector::Constant(3, 10.0));
  EXPECT_TRUE(tr.diverged);
  ASSERT_EQ(tr.objective.size(), 21u);
  EXPECT_TRUE(std::isinf(tr.objective.back()));
  EXPECT_FALSE(utility({tr}).defined);
}

TEST(RunOnce, RejectsBadParams) {
  const auto p = generate_problem(small_spec(), 3);
  const Vector w0 = Vector::Zero(3);
  Hyperparams h;
  h.gamma0 = 0.1;
  EXPECT_THROW(run_once(p, Algorithm::saga, h, 5, 0, w0), std::invalid_argument);  // beta = 0
  h.beta = 1;
  h.gamma0 = -1;
  EXPECT_THROW(run_once(p, Algorithm::saga, h, 5, 0, w0), std::invalid_argument);
  EXPECT_THROW(run_once(p, Algorithm::saga, tuned_defaults(Algorithm::saga), 5, 0, Vector::Zero(2)), std::invalid_argument);
}

TEST(Utility, Examples) {
  auto r = utility({trace({10, 8, 5})});
  EXPECT_EQ(r.total_descent, 5.0);
  EXPECT_EQ(r.absolute_ascent, 0.0);
  EXPECT_EQ(r.utility, 0.0);
  EXPECT_TRUE(r.defined);

  r = utility({trace({10, 12, 5})});
  EXPECT_EQ(r.total_descent, 5.0);
  EXPECT_EQ(r.absolute_ascent, 2.0);
  EXPECT_EQ(r.utility, 0.4);

  r = utility({trace({10, 8}), trace({10, 4})});
  EXPECT_EQ(r.total_descent, 6.0);
  EXPECT_EQ(r.absolute_ascent, 0.0);
  EXPECT_EQ(r.mean_objective, 6.0);
}

TEST(Utility, UndefinedCases) {
  EXPECT_FALSE(utility({trace({3, 3, 3})}).defined);
  EXPECT_FALSE(utility({trace({3, 4, 5})}).defined);
  EXPECT_FALSE(utility({trace({3, std::numeric_limits<double>::infinity(), 1})}).defined);
  EXPECT_THROW(utility({}), std::invalid_argument);
  EXPECT_THROW(utility({trace({1, 2}), trace({1})}), std::invalid_argument);
  EXPECT_EQ(utility({trace({7})}).mean_objective, 7.0);
}

TEST(Utility, FilterThreshold) {
  EXPECT_TRUE(passes_filter(utility({trace({100, 100.5, 0})}), 0.01));
  EXPECT_TRUE(passes_filter(utility({trace({100, 100.9990234375, 0})}), 0.01));
  EXPECT_FALSE(passes_filter(utility({trace({100, 101, 0})}), 0.01));
  EXPECT_FALSE(passes_filter(utility({trace({100, 101.5, 0})}), 0.01));
}

TEST(Utility, ScaleCovariantAndOrderInvariant) {
  Rng rng(1);
  std::vector<RunTrace> traces;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> v{50.0};
    for (int t = 0; t < 30; ++t) v.push_back(v.back() + rng.normal() - 0.5);
    traces.push_back(trace(v, k));
  }
  const auto base = utility(traces);
  for (double scale : {0.5, 4.0, 1024.0}) {
    auto scaled = traces;
    for (auto& t : scaled) {
      for (auto& x : t.objective) x *= scale;
    }
    EXPECT_NEAR(utility(scaled).utility, base.utility, 1e-12 * base.utility);
  }
  auto reversed = traces;
  std::reverse(reversed.begin(), reversed.end());
  // Reordering keeps f(w^0) here because every trace starts from the same point.
  EXPECT_NEAR(utility(reversed).mean_objective, base.mean_objective, 1e-12 * std::abs(base.mean_objective));
}

TEST(Grids, DecadeGrid) {
  const auto g = decade_grid(Algorithm::saga);
  EXPECT_EQ(g.beta, (std::vector<double>{1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1}));
  EXPECT_EQ(g.gamma0, g.beta);
  EXPECT_EQ(g.c_gamma, (std::vector<double>{0, 1e-4, 1e-3, 1e-2, 1e-1, 1, 10, 100}));
  EXPECT_EQ(g.eta, (std::vector<unsigned>{1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(expand_grid(g).size(), 8u * 8 * 8);
  EXPECT_EQ(expand_grid(decade_grid(Algorithm::subsgdp)).size(), 8u * 8 * 7);
  EXPECT_EQ(expand_grid(decade_grid(Algorithm::subsgd)).size(), 8u * 8);
}

TEST(Grids, ExpansionIsLexicographic) {
  OptimizerGrid g;
  g.algorithm = Algorithm::sgd;
  g.beta = {1.0, 0.1};
  g.gamma0 = {0.5, 0.2};
  g.c_gamma = {0.0};
  const auto cells = expand_grid(g);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].beta, 0.1);
  EXPECT_EQ(cells[0].gamma0, 0.2);
  EXPECT_EQ(cells[1].gamma0, 0.5);
  EXPECT_EQ(cells[3].beta, 1.0);
}

TEST(GridSearch, OneCellWins) {
  auto c = small_experiment();
  OptimizerGrid g;
  g.algorithm = Algorithm::saga;
  g.beta = {1.0};
  g.gamma0 = {0.01};
  g.c_gamma = {0.0};
  c.optimizers = {g};
  c.utility_threshold = 1e9;
  const auto r = grid_search(c);
  ASSERT_EQ(r.winners.size(), 1u);
  ASSERT_TRUE(r.winners[0].cell.has_value());
  EXPECT_EQ(*r.winners[0].cell, 0u);
  EXPECT_EQ(r.cells[0].traces.size(), 3u);
  EXPECT_TRUE(r.all_stable());
}

TEST(GridSearch, AllFilteredIsNoStableSetting) {
  auto c = small_experiment();
  OptimizerGrid g;
  g.algorithm = Algorithm::sgd;
  g.beta = {1.0};
  g.gamma0 = {0.0};
  g.c_gamma = {0.0, 1.0};
  c.optimizers = {g};
  const auto r = grid_search(c);
  EXPECT_FALSE(r.winners[0].cell.has_value());
  EXPECT_FALSE(r.all_stable());
  for (const auto& cell : r.cells) EXPECT_TRUE(cell.traces.empty());
  EXPECT_NE(winners_to_csv(r).find("no_stable_setting"), std::string::npos);
}

TEST(GridSearch, TiesGoToTheEarlierCell) {
  // With a single label f^beta = f, so every beta yields the same traces.
  auto c = small_experiment();
  c.problem.label_count = 1;
  OptimizerGrid g;
  g.algorithm = Algorithm::sgd;
  g.beta = {1.0, 0.1, 10.0};
  g.gamma0 = {0.01};
  g.c_gamma = {0.0};
  c.optimizers = {g};
  c.utility_threshold = 1e9;
  const auto r = grid_search(c);
  ASSERT_EQ(r.cells.size(), 3u);
  EXPECT_EQ(r.cells[0].report.mean_objective, r.cells[2].report.mean_objective);
  ASSERT_TRUE(r.winners[0].cell.has_value());
  EXPECT_EQ(*r.winners[0].cell, 0u);
  EXPECT_EQ(r.cells[0].params.beta, 0.1);
}

TEST(GridSearch, DeterministicAcrossWorkerCounts) {
  auto c = small_experiment();
  OptimizerGrid g;
  g.algorithm = Algorithm::saga;
  g.beta = {0.1, 1.0};
  g.gamma0 = {1e-3, 1e-2};
  g.c_gamma = {0.0, 0.1};
  OptimizerGrid s;
  s.algorithm = Algorithm::subsgdp;
  s.gamma0 = {1e-2};
  s.c_gamma = {0.0};
  s.eta = {1, 3};
  c.optimizers = {g, s};
  c.utility_threshold = 0.5;
  c.workers = 1;
  const auto a = grid_search(c);
  c.workers = 3;
  const auto b = grid_search(c);
  EXPECT_EQ(grid_to_csv(a), grid_to_csv(b));
  EXPECT_EQ(winners_to_csv(a), winners_to_csv(b));
  std::vector<LabeledTrace> ta, tb;
  for (const auto& w : a.winners) {
    if (w.cell) {
      for (const auto& t : a.cells[*w.cell].traces) ta.push_back({std::string(to_string(w.algorithm)), t});
    }
  }
  for (const auto& w : b.winners) {
    if (w.cell) {
      for (const auto& t : b.cells[*w.cell].traces) tb.push_back({std::string(to_string(w.algorithm)), t});
    }
  }
  EXPECT_EQ(traces_to_csv(ta), traces_to_csv(tb));
}

TEST(GridSearch, RegeneratePerSeed) {
  auto c = small_experiment();
  OptimizerGrid g;
  g.algorithm = Algorithm::subsgd;
  g.gamma0 = {0.01};
  g.c_gamma = {0.0};
  c.optimizers = {g};
  c.utility_threshold = 1e9;
  c.regenerate_per_seed = true;
  const auto r = grid_search(c);
  const auto& traces = r.cells[0].traces;
  EXPECT_NE(traces[0].objective.front(), traces[1].objective.front());
}

TEST(Csv, RoundTripIsExactAndStable) {
  std::vector<LabeledTrace> traces;
  Rng rng(3);
  for (int k = 0; k < 3; ++k) {
    RunTrace t;
    t.seed = 100 + k;
    for (int i = 0; i < 6; ++i) t.objective.push_back(std::exp(30 * rng.normal()) * (rng.bernoulli(0.5) ? 1 : -1));
    traces.push_back({k == 2 ? "saga" : "sgd", t});
  }
  RunTrace bad;
  bad.seed = 9;
  bad.objective = {1.0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  bad.diverged = true;
  traces.push_back({"asaga", bad});

  const std::string text = traces_to_csv(traces);
  EXPECT_EQ(text.substr(0, text.find('\n')), "algorithm,seed,iteration,objective");
  const auto back = traces_from_csv(text);
  ASSERT_EQ(back.size(), traces.size());
  for (std::size_t k = 0; k < traces.size(); ++k) {
    EXPECT_EQ(back[k].algorithm, traces[k].algorithm);
    EXPECT_EQ(back[k].trace.seed, traces[k].trace.seed);
    EXPECT_EQ(back[k].trace.objective, traces[k].trace.objective);
    EXPECT_EQ(back[k].trace.diverged, traces[k].trace.diverged);
  }
  EXPECT_EQ(traces_to_csv(back), text);
  EXPECT_THROW(traces_from_csv("algorithm,seed,iteration,objective\nsgd,1,x,2\n"), std::invalid_argument);
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(parse_double(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Report, WritesAllFiles) {
  auto c = small_experiment();
  OptimizerGrid g;
  g.algorithm = Algorithm::subsgd;
  g.gamma0 = {0.0, 0.01};
  g.c_gamma = {0.0};
  OptimizerGrid none;
  none.algorithm = Algorithm::sgd;
  none.beta = {1.0};
  none.gamma0 = {0.0};
  none.c_gamma = {0.0};
  c.optimizers = {g, none};
  c.utility_threshold = 1e9;
  const auto r = grid_search(c);
  const auto dir = std::filesystem::path(::testing::TempDir()) / "gibbsopt_report_test";
  std::filesystem::remove_all(dir);
  write_report(r, dir);
  for (const char* f : {"traces.csv", "grid.csv", "winners.csv", "fig.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const std::string grid = read_text(dir / "grid.csv");
  EXPECT_EQ(grid.substr(0, grid.find('\n')),
            "algorithm,beta,gamma0,c_gamma,eta,total_descent,absolute_ascent,utility,mean_objective,defined,passed");
  // Every row has the same number of fields even with empty optional entries.
  std::size_t start = 0;
  while (start < grid.size()) {
    const std::size_t end = grid.find('\n', start);
    EXPECT_EQ(std::count(grid.begin() + start, grid.begin() + end, ','), 10);
    start = end + 1;
  }
  const std::string winners = read_text(dir / "winners.csv");
  EXPECT_NE(winners.find("sgd,no_stable_setting"), std::string::npos);
  EXPECT_EQ(read_text(dir / "fig.svg").rfind("<svg", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Config, ParsesAndRejects) {
  const auto c = experiment_from_json(R"({
    "problem": {"D": 3, "n": 8, "label_count": 5, "lambda": 2, "slopes": {"distribution": "normal", "scale": 2}},
    "w0": [1, 2, 3], "iterations": 20, "seeds": 2, "utility_threshold": 0.05,
    "optimizers": [
      {"algorithm": "saga", "beta": 1e-4, "gamma0": [1e-3, 1e-2], "c_gamma": 0},
      {"algorithm": "subsgdp", "grid": "decades"},
      {"algorithm": "beta-sched-saga", "gamma0": 1e-3, "c_gamma": 0}
    ]})");
  EXPECT_EQ(c.problem.D, 3u);
  EXPECT_EQ(c.problem.slopes.kind, Distribution::normal);
  EXPECT_EQ(c.problem.slopes.scale, 2.0);
  EXPECT_EQ(c.initial_point(), (Vector(3) << 1, 2, 3).finished());
  ASSERT_EQ(c.optimizers.size(), 3u);
  EXPECT_EQ(c.optimizers[0].gamma0, (std::vector<double>{1e-3, 1e-2}));
  EXPECT_EQ(c.optimizers[1].eta.size(), 7u);
  EXPECT_EQ(c.optimizers[2].beta_schedule.increment, 1e-8);

  for (const char* bad : {
           "{",
           R"({"optimizers": []})",
           R"({"optimizers": [{"algorithm": "adam", "gamma0": 1, "c_gamma": 0}]})",
           R"({"optimizers": [{"algorithm": "saga", "gamma0": 1, "c_gamma": 0}]})",
           R"({"bogus": 1, "optimizers": [{"algorithm": "subsgd", "gamma0": 1, "c_gamma": 0}]})",
           R"({"seeds": 0, "optimizers": [{"algorithm": "subsgd", "gamma0": 1, "c_gamma": 0}]})",
           R"({"w0": [1, 2], "optimizers": [{"algorithm": "subsgd", "gamma0": 1, "c_gamma": 0}]})",
           R"({"optimizers": [{"algorithm": "subsgd", "grid": "coarse"}]})",
       }) {
    EXPECT_THROW(experiment_from_json(bad), std::invalid_argument) << bad;
  }
  EXPECT_EQ(hyperparams_from_json(R"({"beta": 0.5, "eta": 3})").eta, 3u);
  EXPECT_THROW(hyperparams_from_json(R"({"gamma": 1})"), std::invalid_argument);
}
