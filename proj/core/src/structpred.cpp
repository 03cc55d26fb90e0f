#include "gibbsopt/structpred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gibbsopt/rng.hpp"
#include "gibbsopt/sampler.hpp"

namespace gibbsopt {

// ---------------------------------------------------------------------------
// Ising label model

IsingLabelModel::IsingLabelModel(std::size_t ell_, double beta_)
    : ell(ell_),
      theta1(Vector::Zero(static_cast<Eigen::Index>(pair_count(ell_)))),
      theta2(Vector::Zero(static_cast<Eigen::Index>(ell_))),
      theta3(Vector::Zero(static_cast<Eigen::Index>(ell_))),
      beta(beta_) {
  validate();
}

Vector IsingLabelModel::parameters() const {
  Vector p(static_cast<Eigen::Index>(parameter_count()));
  p << theta1, theta2, theta3;
  return p;
}

void IsingLabelModel::set_parameters(const Vector& params) {
  if (static_cast<std::size_t>(params.size()) != parameter_count()) {
    throw std::invalid_argument("IsingLabelModel: expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  const auto pairs = static_cast<Eigen::Index>(pair_count(ell));
  const auto l = static_cast<Eigen::Index>(ell);
  theta1 = params.head(pairs);
  theta2 = params.segment(pairs, l);
  theta3 = params.tail(l);
}

void IsingLabelModel::validate() const {
  if (ell == 0) throw std::invalid_argument("IsingLabelModel: ell must be at least 1");
  if (static_cast<std::size_t>(theta1.size()) != pair_count(ell)) {
    throw std::invalid_argument("IsingLabelModel: theta1 must have ell(ell-1)/2 entries");
  }
  if (static_cast<std::size_t>(theta2.size()) != ell) throw std::invalid_argument("IsingLabelModel: theta2 must have ell entries");
  if (static_cast<std::size_t>(theta3.size()) != ell) throw std::invalid_argument("IsingLabelModel: theta3 must have ell entries");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("IsingLabelModel: beta must be finite and nonnegative");
}

std::size_t pair_index(std::size_t ell, std::size_t i, std::size_t j) {
  if (!(i < j && j < ell)) throw std::invalid_argument("pair_index: need i < j < ell");
  return i * ell - i * (i + 1) / 2 + (j - i - 1);
}

void check_label(std::span<const int> y) {
  for (int v : y) {
    if (v != 1 && v != -1) throw std::invalid_argument("label entries must be -1 or +1");
  }
}

namespace {

void check_features(std::size_t ell, const Vector& features) {
  if (static_cast<std::size_t>(features.size()) != ell) {
    throw std::invalid_argument("features have length " + std::to_string(features.size()) + ", expected " +
                                std::to_string(ell));
  }
}

}  // namespace

Vector feature_map(std::span<const int> y, const Vector& features) {
  check_label(y);
  const std::size_t ell = y.size();
  check_features(ell, features);
  Vector phi(static_cast<Eigen::Index>(IsingLabelModel::pair_count(ell) + 2 * ell));
  Eigen::Index p = 0;
  for (std::size_t i = 0; i < ell; ++i) {
    for (std::size_t j = i + 1; j < ell; ++j) phi(p++) = y[i] * y[j];
  }
  for (std::size_t k = 0; k < ell; ++k) phi(p++) = features(static_cast<Eigen::Index>(k)) * y[k];
  for (std::size_t k = 0; k < ell; ++k) phi(p++) = y[k];
  return phi;
}

double eval_score(const IsingLabelModel& model, const Vector& features, std::span<const int> y) {
  if (y.size() != model.ell) throw std::invalid_argument("eval_score: label length does not match model");
  check_label(y);
  check_features(model.ell, features);
  double s = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < model.ell; ++i) {
    for (std::size_t j = i + 1; j < model.ell; ++j) s += model.theta1(static_cast<Eigen::Index>(p++)) * y[i] * y[j];
  }
  for (std::size_t k = 0; k < model.ell; ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    s += (model.theta2(e) * features(e) + model.theta3(e)) * y[k];
  }
  return s;
}

std::size_t hamming(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: labels differ in length");
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k] ? 1 : 0;
  return d;
}

double local_field(const IsingLabelModel& model, const Vector& features, std::span<const int> anchor,
                   std::span<const int> spins, std::size_t k) {
  if (spins.size() != model.ell || k >= model.ell) throw std::invalid_argument("local_field: bad spin index or length");
  if (!anchor.empty() && anchor.size() != model.ell) throw std::invalid_argument("local_field: anchor length mismatch");
  const auto e = static_cast<Eigen::Index>(k);
  double h = model.theta2(e) * features(e) + model.theta3(e);
  for (std::size_t j = 0; j < model.ell; ++j) {
    if (j == k) continue;
    const std::size_t p = j < k ? pair_index(model.ell, j, k) : pair_index(model.ell, k, j);
    h += model.theta1(static_cast<Eigen::Index>(p)) * spins[j];
  }
  // Delta(y', a) = sum_j (1 - y'_j a_j) / 2 contributes -a_k / 2 per unit y'_k.
  if (!anchor.empty()) h -= 0.5 * anchor[k];
  return h;
}

// ---------------------------------------------------------------------------
// Objective kinds

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::max_margin: return "mm";
    case ObjectiveKind::softmax_margin: return "s3vm";
    case ObjectiveKind::conditional_likelihood: return "cl";
    case ObjectiveKind::loss_targeted_likelihood: return "lcl";
    case ObjectiveKind::risk: return "risk";
    case ObjectiveKind::jensen_risk_bound: return "jrb";
  }
  return "?";
}

ObjectiveKind objective_kind_from_string(std::string_view name) {
  if (name == "mm") return ObjectiveKind::max_margin;
  if (name == "s3vm" || name == "smm") return ObjectiveKind::softmax_margin;
  if (name == "cl") return ObjectiveKind::conditional_likelihood;
  if (name == "lcl") return ObjectiveKind::loss_targeted_likelihood;
  if (name == "risk") return ObjectiveKind::risk;
  if (name == "jrb") return ObjectiveKind::jensen_risk_bound;
  throw std::invalid_argument("unknown objective kind '" + std::string(name) + "'");
}

void ObjectiveSpec::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("objective: lambda must be nonnegative");
  if (kind == ObjectiveKind::loss_targeted_likelihood && !(mu_spread > 0.0)) {
    throw std::invalid_argument("objective: LCL needs mu_spread > 0");
  }
}

Label label_from_index(std::size_t ell, std::uint64_t index) {
  if (ell == 0 || ell > 63) throw std::invalid_argument("label_from_index: ell must lie in [1, 63]");
  Label y(ell);
  for (std::size_t j = 0; j < ell; ++j) y[j] = (index >> (ell - 1 - j)) & 1U ? 1 : -1;
  return y;
}

std::uint64_t index_from_label(std::span<const int> y) {
  check_label(y);
  std::uint64_t k = 0;
  for (int v : y) k = (k << 1) | (v > 0 ? 1U : 0U);
  return k;
}

namespace {

std::uint64_t state_count(std::size_t ell) {
  if (ell > kExactLabelLimit) {
    throw std::invalid_argument("exact enumeration supports ell <= " + std::to_string(kExactLabelLimit) +
                                ", got " + std::to_string(ell));
  }
  return std::uint64_t{1} << ell;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> normalized_exp(const std::vector<double>& logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) p[k] = std::exp(logits[k] - lse);
  return p;
}

void check_data(const IsingLabelModel& model, std::span<const LabeledExample> data) {
  model.validate();
  for (const auto& ex : data) {
    check_features(model.ell, ex.features);
    if (ex.label.size() != model.ell) throw std::invalid_argument("example label length does not match model");
    check_label(ex.label);
  }
}

void check_beta(const ObjectiveSpec& spec, const IsingLabelModel& model) {
  if (spec.kind != ObjectiveKind::max_margin && !(model.beta > 0.0)) {
    throw std::invalid_argument(std::string("objective ") + std::string(to_string(spec.kind)) + " needs beta > 0");
  }
}

// Score and loss of every state for one example.
struct StateTable {
  std::vector<double> score;
  std::vector<double> loss;
};

StateTable tabulate(const IsingLabelModel& model, const LabeledExample& ex) {
  const std::uint64_t states = state_count(model.ell);
  StateTable t;
  t.score.resize(states);
  t.loss.resize(states);
  for (std::uint64_t k = 0; k < states; ++k) {
    const Label y = label_from_index(model.ell, k);
    t.score[k] = eval_score(model, ex.features, y);
    t.loss[k] = static_cast<double>(hamming(y, ex.label));
  }
  return t;
}

Vector expected_features(std::size_t ell, const Vector& features, const std::vector<double>& weights) {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(IsingLabelModel::pair_count(ell) + 2 * ell));
  for (std::uint64_t k = 0; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    acc += weights[k] * feature_map(label_from_index(ell, k), features);
  }
  return acc;
}

std::vector<double> scaled(const std::vector<double>& v, double beta) {
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = beta * v[k];
  return out;
}

std::vector<double> scaled_sum(const std::vector<double>& a, const std::vector<double>& b, double beta) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = beta * (a[k] + b[k]);
  return out;
}

std::size_t first_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

struct ExampleTerm {
  double value = 0.0;
  Vector grad;
};

ExampleTerm example_term(const ObjectiveSpec& spec, const IsingLabelModel& model, const LabeledExample& ex,
                         double n, bool want_grad) {
  const StateTable t = tabulate(model, ex);
  const double beta = model.beta;
  const double s_true = eval_score(model, ex.features, ex.label);
  const std::size_t ell = model.ell;
  ExampleTerm out;

  switch (spec.kind) {
    case ObjectiveKind::max_margin: {
      std::vector<double> margin(t.score.size());
      for (std::size_t k = 0; k < margin.size(); ++k) margin[k] = t.loss[k] + t.score[k];
      const std::size_t best = first_argmax(margin);
      out.value = margin[best] - s_true;
      if (want_grad) {
        out.grad = feature_map(label_from_index(ell, best), ex.features) - feature_map(ex.label, ex.features);
      }
      break;
    }
    case ObjectiveKind::softmax_margin: {
      const std::vector<double> logits = scaled_sum(t.loss, t.score, beta);
      out.value = log_sum_exp(logits) / beta - s_true;
      if (want_grad) {
        out.grad = expected_features(ell, ex.features, normalized_exp(logits)) - feature_map(ex.label, ex.features);
      }
      break;
    }
    case ObjectiveKind::conditional_likelihood: {
      const std::vector<double> logits = scaled(t.score, beta);
      out.value = log_sum_exp(logits) - beta * s_true;
      if (want_grad) {
        out.grad = beta * (expected_features(ell, ex.features, normalized_exp(logits)) -
                           feature_map(ex.label, ex.features));
      }
      break;
    }
    case ObjectiveKind::loss_targeted_likelihood: {
      const std::vector<double> logits = scaled(t.score, beta);
      const std::vector<double> q = loss_target_distribution(ex.label, spec.mu_spread);
      double eq_score = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) eq_score += q[k] * t.score[k];
      out.value = log_sum_exp(logits) - beta * eq_score;
      if (want_grad) {
        out.grad = beta * (expected_features(ell, ex.features, normalized_exp(logits)) -
                           expected_features(ell, ex.features, q));
      }
      break;
    }
    case ObjectiveKind::risk: {
      const std::vector<double> p = normalized_exp(scaled(t.score, beta));
      double mean_loss = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) mean_loss += p[k] * t.loss[k];
      out.value = mean_loss / (n * beta);
      if (want_grad) {
        // Cov_B(Delta, Phi) / n
        std::vector<double> w(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) w[k] = p[k] * (t.loss[k] - mean_loss);
        out.grad = expected_features(ell, ex.features, w) / n;
      }
      break;
    }
    case ObjectiveKind::jensen_risk_bound: {
      const std::vector<double> plain = scaled(t.score, beta);
      const std::vector<double> shifted = scaled_sum(t.loss, t.score, beta);
      // The Jensen step E[Delta] <= (1/beta) log E[exp(beta Delta)] applied
      // inside the 1/(n beta) risk normalization.
      out.value = (log_sum_exp(shifted) - log_sum_exp(plain)) / (n * beta * beta);
      if (want_grad) {
        out.grad = (expected_features(ell, ex.features, normalized_exp(shifted)) -
                    expected_features(ell, ex.features, normalized_exp(plain))) /
                   (n * beta);
      }
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<double> loss_target_distribution(std::span<const int> y, double mu) {
  check_label(y);
  const std::uint64_t states = state_count(y.size());
  std::vector<double> logits(states);
  for (std::uint64_t k = 0; k < states; ++k) {
    logits[k] = -mu * static_cast<double>(hamming(label_from_index(y.size(), k), y));
  }
  return normalized_exp(logits);
}

double objective_value(const ObjectiveSpec& spec, const IsingLabelModel& model,
                       std::span<const LabeledExample> data) {
  spec.validate();
  check_data(model, data);
  check_beta(spec, model);
  state_count(model.ell);
  const auto n = static_cast<double>(data.size());
  double total = 0.0;
  for (const auto& ex : data) total += example_term(spec, model, ex, n, false).value;
  return total + 0.5 * spec.lambda * model.parameters().squaredNorm();
}

Vector objective_grad(const ObjectiveSpec& spec, const IsingLabelModel& model, std::span<const LabeledExample> data) {
  spec.validate();
  check_data(model, data);
  check_beta(spec, model);
  state_count(model.ell);
  const auto n = static_cast<double>(data.size());
  const Vector theta = model.parameters();
  Vector grad = spec.lambda * theta;
  for (const auto& ex : data) grad += example_term(spec, model, ex, n, true).grad;
  return grad;
}

namespace {

// Per-batch feature means of one chain; optionally tracks the best visited
// state under Delta + s.
struct ChainSummary {
  Eigen::MatrixXd batch_means;  // P x batches
  Label best;
  double best_value = -std::numeric_limits<double>::infinity();
};

ChainSummary run_chain(const IsingLabelModel& model, const LabeledExample& ex, bool with_loss,
                       const GibbsOptions& options, Rng rng) {
  const std::size_t per_batch = options.samples / options.batches;
  const auto params = static_cast<Eigen::Index>(model.parameter_count());
  ChainSummary out;
  out.batch_means = Eigen::MatrixXd::Zero(params, static_cast<Eigen::Index>(options.batches));

  GibbsChainState state;
  state.beta = model.beta;
  state.spins.resize(model.ell);
  for (auto& s : state.spins) s = rng.bernoulli(0.5) ? 1 : -1;
  const std::span<const int> anchor = with_loss ? std::span<const int>(ex.label) : std::span<const int>{};

  auto visit = [&](const Label& y) {
    const double v = static_cast<double>(hamming(y, ex.label)) + eval_score(model, ex.features, y);
    if (v > out.best_value) {
      out.best_value = v;
      out.best = y;
    }
  };

  for (std::size_t s = 0; s < options.burn_in; ++s) {
    gibbs_sweep_inplace(model, ex.features, anchor, state, rng);
    visit(state.spins);
  }
  for (std::size_t b = 0; b < options.batches; ++b) {
    auto col = out.batch_means.col(static_cast<Eigen::Index>(b));
    for (std::size_t s = 0; s < per_batch; ++s) {
      gibbs_sweep_inplace(model, ex.features, anchor, state, rng);
      visit(state.spins);
      col += feature_map(state.spins, ex.features);
    }
    col /= static_cast<double>(per_batch);
  }
  return out;
}

}  // namespace

GradientEstimate objective_grad_gibbs(const ObjectiveSpec& spec, const IsingLabelModel& model,
                                      std::span<const LabeledExample> data, const GibbsOptions& options) {
  spec.validate();
  check_data(model, data);
  check_beta(spec, model);
  if (spec.kind == ObjectiveKind::risk) {
    throw std::invalid_argument("objective_grad_gibbs: the risk gradient has no sampled estimator");
  }
  if (options.batches < 2) throw std::invalid_argument("objective_grad_gibbs: need at least 2 batches");
  if (options.samples < options.batches) {
    throw std::invalid_argument("objective_grad_gibbs: need at least one sample per batch");
  }

  const double beta = model.beta;
  const auto n = static_cast<double>(data.size());
  const auto params = static_cast<Eigen::Index>(model.parameter_count());
  const auto batches = static_cast<Eigen::Index>(options.batches);
  Eigen::MatrixXd totals = Eigen::MatrixXd::Zero(params, batches);

  for (std::size_t i = 0; i < data.size(); ++i) {
    const LabeledExample& ex = data[i];
    const Vector phi_true = feature_map(ex.label, ex.features);
    auto chain = [&](bool with_loss) {
      return run_chain(model, ex, with_loss, options, Rng::stream(options.seed, i, with_loss ? 1 : 0));
    };
    switch (spec.kind) {
      case ObjectiveKind::max_margin: {
        const ChainSummary c = chain(true);
        totals.colwise() += feature_map(c.best, ex.features) - phi_true;
        break;
      }
      case ObjectiveKind::softmax_margin: {
        const ChainSummary c = chain(true);
        totals += c.batch_means;
        totals.colwise() -= phi_true;
        break;
      }
      case ObjectiveKind::conditional_likelihood: {
        const ChainSummary c = chain(false);
        totals += beta * c.batch_means;
        totals.colwise() -= beta * phi_true;
        break;
      }
      case ObjectiveKind::loss_targeted_likelihood: {
        // Under q each spin flips independently with probability 1/(1+e^mu).
        const double r = std::tanh(0.5 * spec.mu_spread);
        Vector eq = phi_true;
        const auto pairs = static_cast<Eigen::Index>(IsingLabelModel::pair_count(model.ell));
        eq.head(pairs) *= r * r;
        eq.tail(params - pairs) *= r;
        const ChainSummary c = chain(false);
        totals += beta * c.batch_means;
        totals.colwise() -= beta * eq;
        break;
      }
      case ObjectiveKind::jensen_risk_bound: {
        const ChainSummary shifted = chain(true);
        const ChainSummary plain = chain(false);
        totals += (shifted.batch_means - plain.batch_means) / (n * beta);
        break;
      }
      case ObjectiveKind::risk:
        break;
    }
  }

  GradientEstimate out;
  const Vector mean = totals.rowwise().mean();
  const Eigen::MatrixXd centered = totals.colwise() - mean;
  const double b = static_cast<double>(batches);
  out.standard_error = (centered.rowwise().squaredNorm() / (b - 1.0) / b).cwiseSqrt();
  out.gradient = mean + spec.lambda * model.parameters();
  return out;
}

Label predict(const IsingLabelModel& model, const Vector& features) {
  model.validate();
  check_features(model.ell, features);
  const std::uint64_t states = state_count(model.ell);
  std::uint64_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < states; ++k) {
    const double s = eval_score(model, features, label_from_index(model.ell, k));
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return label_from_index(model.ell, best);
}

double beta_eff(const IsingLabelModel& model, const Vector& features) {
  const Label ground = predict(model, features);
  return model.beta * std::abs(eval_score(model, features, ground));
}

}  // namespace gibbsopt
