#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gibbsopt/ising.hpp"

namespace gibbsopt {

enum class ObjectiveKind {
  max_margin,                // MM
  softmax_margin,            // SMM / S3VM
  conditional_likelihood,    // CL
  loss_targeted_likelihood,  // LCL
  risk,                      // Risk
  jensen_risk_bound,         // JRB
};

std::string_view to_string(ObjectiveKind kind);
/// Accepts "mm", "s3vm"/"smm", "cl", "lcl", "risk", "jrb". Throws std::invalid_argument.
ObjectiveKind objective_kind_from_string(std::string_view name);

/// Objective selection. `mu_spread` is the spread of the loss-targeted
/// distribution q(y') ~ exp(-mu Delta(y', y)); `lambda` weighs lambda/2 |theta|^2,
/// which is added for every kind (lambda = 0 disables it).
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::conditional_likelihood;
  double mu_spread = 1.0;
  double lambda = 0.0;

  void validate() const;
};

struct LabeledExample {
  Vector features;
  Label label;
};

/// Largest ell for which the 2^ell states are enumerated.
inline constexpr std::size_t kExactLabelLimit = 20;

/// State k of {-1, +1}^ell in lexicographic order with -1 < +1: y_j is +1
/// iff bit (ell - 1 - j) of k is set. State 0 is all -1.
Label label_from_index(std::size_t ell, std::uint64_t index);
std::uint64_t index_from_label(std::span<const int> y);

/// Exact q over all 2^ell states, indexed as in label_from_index.
std::vector<double> loss_target_distribution(std::span<const int> y, double mu);

/// Per kind, summed over examples:
///   MM    max_y' [Delta + s(y') - s(y)]
///   S3VM  max^beta_y' [Delta + s(y') - s(y)]
///   CL    log Z_B - beta s(y)                     (= -log p_B(y))
///   LCL   log Z_B - beta E_q[s]
///   Risk  1/(n beta) E_B[Delta]
///   JRB   1/(n beta^2) log E_B[exp(beta Delta)]     (>= Risk for every beta)
/// plus lambda/2 |theta|^2. Exact enumeration; throws std::invalid_argument
/// when ell exceeds kExactLabelLimit or the data do not match the model.
double objective_value(const ObjectiveSpec& spec, const IsingLabelModel& model,
                       std::span<const LabeledExample> data);

/// Exact gradient with respect to (theta1, theta2, theta3).
Vector objective_grad(const ObjectiveSpec& spec, const IsingLabelModel& model, std::span<const LabeledExample> data);

struct GibbsOptions {
  std::size_t burn_in = 200;
  std::size_t samples = 200;
  /// Samples are split into this many equal batches for the standard error;
  /// a remainder of samples % batches is dropped.
  std::size_t batches = 20;
  std::uint64_t seed = 0;
};

struct GradientEstimate {
  Vector gradient;
  /// Batch-means standard error per coordinate (zero for exact terms).
  Vector standard_error;
};

/// Expectations under p_B and p_{B+Delta} replaced by chain averages of the
/// systematic-scan Gibbs sampler (one chain per example and distribution).
/// The loss-targeted expectation uses its product form, which is exact for
/// the Hamming loss. MM uses the best state visited by the p_{B+Delta} chain.
/// Risk is rejected with std::invalid_argument.
GradientEstimate objective_grad_gibbs(const ObjectiveSpec& spec, const IsingLabelModel& model,
                                      std::span<const LabeledExample> data, const GibbsOptions& options);

/// Highest-scoring label; ties go to the lexicographically smallest.
Label predict(const IsingLabelModel& model, const Vector& features);

/// beta * |max_y s(x, y)|.
double beta_eff(const IsingLabelModel& model, const Vector& features);

}  // namespace gibbsopt
