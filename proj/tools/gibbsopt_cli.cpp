// gibbsopt: generate problems, run optimizers, grid-search hyperparameters and
// render reports.
//
// Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error,
// 3 grid search found no stable setting for at least one algorithm.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gibbsopt/bench.hpp"
#include "gibbsopt/problem_io.hpp"

namespace fs = std::filesystem;
using namespace gibbsopt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitUnstable = 3;

struct Options {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;

  std::string problem;
  std::string algo;
  std::string params = "{}";
  std::size_t iters = 1000;
  std::size_t seeds = 20;
  std::uint64_t seed_base = 0;
  double w0 = 10.0;
  double threshold = 0.01;

  std::string config;
  std::size_t workers = 0;

  std::string in;
  bool log_y = false;
};

int cmd_generate(const Options& o) {
  const ProblemSpec spec = problem_spec_from_json(read_text(o.spec));
  save_problem(o.out, generate_problem(spec, o.seed));
  std::cout << "wrote " << o.out << " (n=" << spec.n << ", D=" << spec.D << ", |Y|=" << spec.label_count << ")\n";
  return 0;
}

void print_cell(const CellResult& cell) {
  const UtilityReport& r = cell.report;
  std::cout << to_string(cell.algorithm) << ": mean objective " << format_double(r.mean_objective)
            << ", descent " << format_double(r.total_descent) << ", ascent " << format_double(r.absolute_ascent)
            << ", utility " << (r.defined ? format_double(r.utility) : std::string("undefined"))
            << (cell.passed ? "" : " (fails the utility filter)") << "\n";
}

int cmd_run(const Options& o) {
  const MinMaxProblem problem = load_problem(o.problem);
  CellResult cell;
  cell.algorithm = algorithm_from_string(o.algo);
  cell.params = hyperparams_from_json(o.params);
  if (o.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  const Vector w0 = Vector::Constant(static_cast<Eigen::Index>(problem.dim()), o.w0);
  for (std::size_t k = 0; k < o.seeds; ++k) {
    cell.traces.push_back(run_once(problem, cell.algorithm, cell.params, o.iters, o.seed_base + k, w0));
  }
  cell.report = utility(cell.traces);
  cell.passed = passes_filter(cell.report, o.threshold);
  GridResult result;
  result.cells.push_back(cell);
  result.winners.push_back(Winner{cell.algorithm, cell.passed ? std::optional<std::size_t>(0) : std::nullopt});
  write_report(result, o.out);
  print_cell(cell);
  return 0;
}

int cmd_gridsearch(const Options& o) {
  ExperimentConfig config = load_experiment(o.config);
  if (o.workers > 0) config.workers = o.workers;
  const GridResult result = grid_search(config);
  write_report(result, o.out);
  int status = 0;
  for (const Winner& w : result.winners) {
    if (w.cell) {
      print_cell(result.cells[*w.cell]);
    } else {
      std::cout << to_string(w.algorithm) << ": no stable setting\n";
      status = kExitUnstable;
    }
  }
  return status;
}

int cmd_report(const Options& o) {
  const std::vector<LabeledTrace> traces = traces_from_csv(read_text(fs::path(o.in) / "traces.csv"));
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "fig.svg", traces_to_svg(traces, o.log_y));

  std::map<std::string, std::vector<RunTrace>> groups;
  std::vector<std::string> order;
  for (const auto& lt : traces) {
    if (!groups.count(lt.algorithm)) order.push_back(lt.algorithm);
    groups[lt.algorithm].push_back(lt.trace);
  }
  std::string csv = "algorithm,runs,final_mean,total_descent,absolute_ascent,utility,mean_objective\n";
  for (const auto& name : order) {
    const auto& runs = groups[name];
    const UtilityReport r = utility(runs);
    double final_sum = 0.0;
    for (const auto& t : runs) final_sum += t.objective.back();
    csv += name + "," + std::to_string(runs.size()) + "," + format_double(final_sum / static_cast<double>(runs.size())) +
           "," + format_double(r.total_descent) + "," + format_double(r.absolute_ascent) + "," +
           (r.defined ? format_double(r.utility) : std::string()) + "," + format_double(r.mean_objective) + "\n";
  }
  write_text(fs::path(o.out) / "summary.csv", csv);
  std::cout << "wrote fig.svg and summary.csv for " << order.size() << " algorithm(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Min-max optimization benchmarks with smoothed and error-tolerant stochastic methods"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Draw a random problem instance");
  gen->add_option("--spec", o.spec, "Problem spec or experiment config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", o.seed, "Generator seed")->required();
  gen->add_option("--out", o.out, "Output problem JSON")->required();

  auto* run = app.add_subcommand("run", "Run one optimizer over several seeds");
  run->add_option("--problem", o.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--algo", o.algo, "sgd|subsgd|subsgdp|saga|beta-sched-saga|asaga|asubsgdp")->required();
  run->add_option("--params", o.params, "Hyperparameters as JSON");
  run->add_option("--iters", o.iters, "Iterations per run");
  run->add_option("--seeds", o.seeds, "Number of seeds");
  run->add_option("--seed-base", o.seed_base, "First seed");
  run->add_option("--w0", o.w0, "Initial iterate w0 = value * ones");
  run->add_option("--threshold", o.threshold, "Utility threshold");
  run->add_option("--out", o.out, "Output directory")->required();

  auto* grid = app.add_subcommand("gridsearch", "Grid-search hyperparameters");
  grid->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  grid->add_option("--out", o.out, "Output directory")->required();
  grid->add_option("--workers", o.workers, "Worker threads (overrides the config)");

  auto* rep = app.add_subcommand("report", "Render fig.svg and summary.csv from traces.csv");
  rep->add_option("--in", o.in, "Directory holding traces.csv")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", o.out, "Output directory")->required();
  rep->add_flag("--log-y", o.log_y, "Logarithmic objective axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*run) return cmd_run(o);
    if (*grid) return cmd_gridsearch(o);
    if (*rep) return cmd_report(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
