#include <set>
#include <stdexcept>
#include <string>

#include "gibbsopt/bench.hpp"
#include "json.hpp"

namespace gibbsopt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("config: " + what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) fail("unknown key '" + item.key() + "' in " + where);
  }
}

DistributionSpec parse_distribution(const json& j, const std::string& where) {
  only_keys(j, where, {"distribution", "location", "scale"});
  DistributionSpec d;
  const std::string kind = j.value("distribution", std::string("cauchy"));
  if (kind == "cauchy") {
    d.kind = Distribution::cauchy;
  } else if (kind == "normal") {
    d.kind = Distribution::normal;
  } else if (kind == "uniform") {
    d.kind = Distribution::uniform;
  } else {
    fail("unknown distribution '" + kind + "' in " + where);
  }
  d.location = j.value("location", 0.0);
  d.scale = j.value("scale", 1.0);
  return d;
}

ProblemSpec parse_problem(const json& j) {
  only_keys(j, "problem", {"D", "n", "label_count", "lambda", "slopes", "offsets", "shift_range"});
  ProblemSpec p;
  p.D = j.value("D", p.D);
  p.n = j.value("n", p.n);
  p.label_count = j.value("label_count", p.label_count);
  p.lambda = j.value("lambda", p.lambda);
  if (j.contains("slopes")) p.slopes = parse_distribution(j.at("slopes"), "problem.slopes");
  if (j.contains("offsets")) p.offsets = parse_distribution(j.at("offsets"), "problem.offsets");
  if (j.contains("shift_range")) {
    const auto r = j.at("shift_range").get<std::vector<double>>();
    if (r.size() != 2) fail("problem.shift_range must be [lo, hi]");
    p.shift_lo = r[0];
    p.shift_hi = r[1];
  }
  p.validate();
  return p;
}

BetaSchedule parse_beta_schedule(const json& j) {
  only_keys(j, "beta_schedule", {"beta0", "increment", "period"});
  BetaSchedule s;
  s.beta0 = j.value("beta0", s.beta0);
  s.increment = j.value("increment", s.increment);
  s.period = j.value("period", s.period);
  return s;
}

Hyperparams parse_hyperparams(const json& j) {
  only_keys(j, "params", {"beta", "gamma0", "c_gamma", "eta", "beta_schedule", "theta", "mc_samples"});
  Hyperparams p;
  p.beta = j.value("beta", p.beta);
  p.gamma0 = j.value("gamma0", p.gamma0);
  p.c_gamma = j.value("c_gamma", p.c_gamma);
  p.eta = j.value("eta", p.eta);
  if (j.contains("beta_schedule")) p.beta_schedule = parse_beta_schedule(j.at("beta_schedule"));
  p.theta = j.value("theta", p.theta);
  p.mc_samples = j.value("mc_samples", p.mc_samples);
  return p;
}

OptimizerGrid parse_grid(const json& j) {
  only_keys(j, "optimizer",
            {"algorithm", "grid", "beta", "gamma0", "c_gamma", "eta", "beta_schedule", "theta", "mc_samples"});
  if (!j.contains("algorithm")) fail("optimizer entry needs an 'algorithm'");
  const Algorithm a = algorithm_from_string(j.at("algorithm").get<std::string>());
  OptimizerGrid g;
  g.algorithm = a;
  if (j.contains("grid")) {
    if (j.at("grid") != "decades") fail("the only named grid is \"decades\"");
    g = decade_grid(a);
  }
  // A scalar is shorthand for a one-value axis.
  auto axis = [&j](const char* key, auto& out) {
    if (!j.contains(key)) return;
    using T = typename std::decay_t<decltype(out)>::value_type;
    const json& v = j.at(key);
    out = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
  };
  axis("beta", g.beta);
  axis("gamma0", g.gamma0);
  axis("c_gamma", g.c_gamma);
  axis("eta", g.eta);
  g.beta_schedule = a == Algorithm::beta_sched_saga ? tuned_defaults(a).beta_schedule : g.beta_schedule;
  if (j.contains("beta_schedule")) g.beta_schedule = parse_beta_schedule(j.at("beta_schedule"));
  g.theta = j.value("theta", g.theta);
  g.mc_samples = j.value("mc_samples", g.mc_samples);
  return g;
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(e.what());
  }
}

}  // namespace

ProblemSpec problem_spec_from_json(std::string_view text) {
  const json j = parse_text(text);
  return guarded([&] { return parse_problem(j.contains("problem") ? j.at("problem") : j); });
}

Hyperparams hyperparams_from_json(std::string_view text) {
  const json j = parse_text(text);
  return guarded([&] { return parse_hyperparams(j); });
}

ExperimentConfig experiment_from_json(std::string_view text) {
  const json j = parse_text(text);
  return guarded([&] {
    only_keys(j, "experiment",
              {"problem", "problem_seed", "regenerate_per_seed", "w0", "iterations", "seeds", "seed_base",
               "utility_threshold", "workers", "optimizers"});
    ExperimentConfig c;
    if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
    c.problem_seed = j.value("problem_seed", c.problem_seed);
    c.regenerate_per_seed = j.value("regenerate_per_seed", c.regenerate_per_seed);
    if (j.contains("w0")) {
      const json& w = j.at("w0");
      if (w.is_number()) {
        c.w0_fill = w.get<double>();
      } else {
        c.w0 = w.get<std::vector<double>>();
      }
    }
    c.iterations = j.value("iterations", c.iterations);
    c.seeds = j.value("seeds", c.seeds);
    c.seed_base = j.value("seed_base", c.seed_base);
    c.utility_threshold = j.value("utility_threshold", c.utility_threshold);
    c.workers = j.value("workers", c.workers);
    if (!j.contains("optimizers") || !j.at("optimizers").is_array()) fail("'optimizers' must be an array");
    for (const auto& o : j.at("optimizers")) c.optimizers.push_back(parse_grid(o));
    c.validate();
    return c;
  });
}

ExperimentConfig load_experiment(const std::filesystem::path& path) { return experiment_from_json(read_text(path)); }

}  // namespace gibbsopt
