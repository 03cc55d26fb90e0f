#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gibbsopt/objective.hpp"
#include "gibbsopt/optim.hpp"
#include "gibbsopt/problem_io.hpp"
#include "oracles.hpp"

using namespace gibbsopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

}  // namespace

TEST(EvalPiece, Examples) {
  MinMaxProblem p(1, 2, 1, 0.0);
  p.offset(0, 0) = 5;
  EXPECT_EQ(eval_piece(p, 0, 0, vec({-3, 11})), 5.0);

  MinMaxProblem q(1, 2, 1, 0.0);
  q.slope(0, 0) = vec({1, 0});
  EXPECT_EQ(eval_piece(q, 0, 0, vec({3, 7})), 3.0);

  MinMaxProblem r(1, 2, 1, 0.0);
  r.slope(0, 0) = vec({2, -1});
  r.shift(0) = vec({1, 1});
  r.offset(0, 0) = 0.5;
  EXPECT_DOUBLE_EQ(eval_piece(r, 0, 0, vec({2, 4})), -0.5);
  EXPECT_DOUBLE_EQ(eval_piece(r, 0, 0, vec({2, 4})), static_cast<double>(oracle::piece(r, 0, 0, vec({2, 4}))));
}

TEST(EvalPiece, RejectsBadIndices) {
  MinMaxProblem p(2, 2, 3, 0.0);
  EXPECT_THROW(eval_piece(p, 2, 0, vec({0, 0})), std::invalid_argument);
  EXPECT_THROW(eval_piece(p, 0, 3, vec({0, 0})), std::invalid_argument);
  EXPECT_THROW(eval_piece(p, 0, 0, vec({0, 0, 0})), std::invalid_argument);
  EXPECT_THROW(MinMaxProblem(0, 2, 3, 0.0), std::invalid_argument);
  EXPECT_THROW(MinMaxProblem(1, 2, 3, -1.0), std::invalid_argument);
}

TEST(EvalF, Examples) {
  MinMaxProblem trivial(1, 3, 1, 0.0);
  EXPECT_EQ(eval_f(trivial, vec({4, -2, 9})), 0.0);

  MinMaxProblem reg_only(3, 2, 2, 2.0);
  EXPECT_DOUBLE_EQ(eval_f(reg_only, vec({1, 1})), 2.0);
}

TEST(EvalF, MatchesBruteForce) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_problem(rng, 3, 4, 4, 0.7);
    const Vector w = oracle::random_vector(rng, 4, 3.0);
    EXPECT_NEAR(eval_f(p, w), static_cast<double>(oracle::brute_f(p, w)), 1e-12);
  }
}

TEST(Softmax, Examples) {
  const std::vector<double> one{3.0};
  for (double beta : {0.1, 1.0, 10.0}) EXPECT_DOUBLE_EQ(softmax(one, beta), 3.0);
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_NEAR(softmax(zeros, 1.0), std::numbers::ln2, 1e-15);
  // log(e + e^2 + e^3), evaluated at 30 digits.
  const std::vector<double> ramp{1.0, 2.0, 3.0};
  EXPECT_NEAR(softmax(ramp, 1.0), 3.407605964444380, 1e-14);
}

TEST(Softmax, Errors) {
  const std::vector<double> empty;
  EXPECT_THROW(softmax(empty, 1.0), std::invalid_argument);
  const std::vector<double> v{1.0};
  EXPECT_THROW(softmax(v, 0.0), std::invalid_argument);
  EXPECT_THROW(softmax(v, -1.0), std::invalid_argument);
}

TEST(Softmax, NoOverflowAtLargeRange) {
  const std::vector<double> v{0.0, 800.0, 799.0};
  const double s = softmax(v, 1.0);
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_NEAR(s, 800.0 + std::log1p(std::exp(-1.0)), 1e-12);
}

TEST(EvalFBeta, SingletonLabelSetIsExact) {
  Rng rng(12);
  const auto p = oracle::random_problem(rng, 4, 3, 1, 1.5);
  const Vector w = oracle::random_vector(rng, 3);
  for (double beta : {0.1, 1.0, 100.0}) EXPECT_EQ(eval_f_beta(p, w, beta), eval_f(p, w));
}

TEST(EvalFBeta, EqualPieces) {
  MinMaxProblem p(1, 2, 5, 0.0);
  for (std::size_t y = 0; y < 5; ++y) p.offset(0, y) = 1.25;
  for (double beta : {0.5, 2.0}) EXPECT_NEAR(eval_f_beta(p, vec({3, 3}), beta), 1.25 + std::log(5.0) / beta, 1e-14);
}

TEST(EvalFBeta, MatchesLongDoubleOracle) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_problem(rng, 5, 3, 7, 0.3, 5.0);
    const Vector w = oracle::random_vector(rng, 3, 2.0);
    for (double beta : {0.1, 1.0, 10.0}) {
      EXPECT_NEAR(eval_f_beta(p, w, beta), static_cast<double>(oracle::brute_f_beta(p, w, beta)), 1e-11);
    }
  }
}

TEST(EvalFBeta, SandwichAndMonotonicity) {
  Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_problem(rng, 1 + rng.index(10), 1 + rng.index(5), 1 + rng.index(30), 1.0);
    const Vector w = oracle::random_vector(rng, p.dim(), 3.0);
    const double f = eval_f(p, w);
    double previous = std::numeric_limits<double>::infinity();
    for (double beta : {0.1, 1.0, 10.0, 100.0}) {
      const double fb = eval_f_beta(p, w, beta);
      EXPECT_GE(fb - f, -1e-9);
      EXPECT_LE(fb - f, std::log(static_cast<double>(p.label_count())) / beta + 1e-9);
      EXPECT_LE(fb, previous + 1e-12);
      previous = fb;
    }
  }
}

TEST(Boltzmann, Examples) {
  const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  for (double p : boltzmann(flat, 3.0).probabilities) EXPECT_DOUBLE_EQ(p, 0.25);

  const std::vector<double> two{0.0, std::log(3.0)};
  const auto d = boltzmann(two, 1.0);
  EXPECT_NEAR(d.probabilities[0], 0.25, 1e-15);
  EXPECT_NEAR(d.probabilities[1], 0.75, 1e-15);
  EXPECT_NEAR(d.log_partition, std::log(4.0), 1e-15);

  const std::vector<double> distinct{0.3, 0.31, -2.0};
  EXPECT_GT(boltzmann(distinct, 1e6).probabilities[1], 1.0 - 1e-9);
}

TEST(Boltzmann, NormalizationAndPartition) {
  Rng rng(15);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(1 + rng.index(50));
    std::vector<long double> lv;
    for (auto& x : v) {
      x = 100 * rng.normal();
      lv.push_back(x);
    }
    const double beta = std::exp(rng.uniform(-3.0, 3.0));
    const auto d = boltzmann(v, beta);
    double sum = 0;
    for (double p : d.probabilities) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const double ref = static_cast<double>(beta * oracle::lse(lv, beta));
    EXPECT_NEAR(d.log_partition, ref, 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(GradFBeta, Examples) {
  MinMaxProblem zero(3, 2, 4, 0.0);
  EXPECT_EQ(grad_f_beta(zero, vec({1, -5}), 1.0), Vector::Zero(2));

  Rng rng(16);
  const auto p = oracle::random_problem(rng, 3, 2, 1, 1.5);
  const Vector w = vec({0.5, -1});
  Vector expected = 1.5 * w;
  for (std::size_t i = 0; i < 3; ++i) expected += p.slope(i, 0) / 3.0;
  EXPECT_LT((grad_f_beta(p, w, 2.0) - expected).norm(), 1e-14);
}

TEST(GradFBeta, FiniteDifferences) {
  Rng rng(17);
  const auto p = oracle::random_problem(rng, 2, 4, 5, 1.0);
  const Vector w = oracle::random_vector(rng, 4);
  const auto f = [&](const Vector& x) { return eval_f_beta(p, x, 0.5); };
  EXPECT_LE(oracle::max_rel_error(grad_f_beta(p, w, 0.5), oracle::fd_gradient(f, w, 1e-5)), 1e-6);
}

TEST(GradFBeta, MatchesSummandOracle) {
  Rng rng(18);
  const auto p = oracle::random_problem(rng, 6, 3, 8, 0.5, 2.0);
  const Vector w = oracle::random_vector(rng, 3);
  Vector mean = Vector::Zero(3);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vector g = oracle::summand_grad_beta(p, i, w, 3.0);
    EXPECT_LT((grad_summand_beta(p, i, w, 3.0) - g).norm(), 1e-12);
    mean += g / static_cast<double>(p.n());
  }
  EXPECT_LT((grad_f_beta(p, w, 3.0) - mean).norm(), 1e-12);
}

TEST(HessianFBeta, FiniteDifferenceOfGradient) {
  Rng rng(19);
  const auto p = oracle::random_problem(rng, 4, 3, 6, 0.8);
  const Vector w = oracle::random_vector(rng, 3);
  const Eigen::MatrixXd H = hessian_f_beta(p, w, 1.5);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const auto gj = [&](const Vector& x) { return grad_f_beta(p, x, 1.5)(j); };
    const Vector row = oracle::fd_gradient(gj, w, 1e-5);
    EXPECT_LE(oracle::max_rel_error(H.row(j).transpose(), row), 1e-6);
  }
  EXPECT_LT((H - H.transpose()).norm(), 1e-14);
}

TEST(Subgradient, Examples) {
  Rng rng(20);
  const auto single = oracle::random_problem(rng, 2, 3, 1, 0.5);
  const Vector w = oracle::random_vector(rng, 3);
  const auto s = subgrad_f_summand(single, 1, w);
  EXPECT_EQ(s.label, 0u);
  EXPECT_LT((s.direction - (0.5 * w + single.slope(1, 0))).norm(), 1e-15);

  MinMaxProblem two(1, 1, 2, 0.0);
  two.offset(0, 0) = 5;
  two.offset(0, 1) = 2;
  EXPECT_EQ(subgrad_f_summand(two, 0, vec({0})).label, 0u);

  MinMaxProblem tie(1, 1, 4, 0.0);
  tie.offset(0, 0) = 1;
  tie.offset(0, 1) = 3;
  tie.offset(0, 2) = 2;
  tie.offset(0, 3) = 3;
  EXPECT_EQ(subgrad_f_summand(tie, 0, vec({0})).label, 1u);
}

TEST(Subgradient, ConvexityInequality) {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = oracle::random_problem(rng, 3, 3, 6, 0.4);
    const Vector w = oracle::random_vector(rng, 3, 2.0);
    const Vector v = oracle::random_vector(rng, 3, 2.0);
    for (std::size_t i = 0; i < p.n(); ++i) {
      const auto s = subgrad_f_summand(p, i, w);
      EXPECT_GE(eval_summand(p, i, v), eval_summand(p, i, w) + s.direction.dot(v - w) - 1e-12);
    }
  }
}

TEST(ComputeBounds, Examples) {
  MinMaxProblem zero(2, 2, 3, 0.0);
  const auto b0 = compute_bounds(zero, 1.0, 1.0);
  EXPECT_EQ(b0.Delta, 0.0);
  EXPECT_EQ(b0.M, 0.0);

  MinMaxProblem p(1, 2, 2, 1.0);
  p.slope(0, 1) = vec({-2, 0.5});
  const auto b = compute_bounds(p, 1.0, 10.0);
  EXPECT_DOUBLE_EQ(b.Delta, 3.0);
  EXPECT_DOUBLE_EQ(b.L, 181.0);
  EXPECT_DOUBLE_EQ(b.mu, 1.0);
  EXPECT_THROW(compute_bounds(p, 0.0, 1.0), std::invalid_argument);
}

TEST(ComputeBounds, SmoothLipschitzIsValid) {
  // The largest Hessian eigenvalue never exceeds either Lipschitz estimate.
  Rng rng(22);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_problem(rng, 4, 3, 5, 1.0);
    const double beta = std::exp(rng.uniform(-2.0, 2.0));
    const Vector w = oracle::random_vector(rng, 3, 0.3);
    const Eigen::MatrixXd H = hessian_f_beta(p, w, beta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    EXPECT_LE(eig.eigenvalues().maxCoeff(), smooth_lipschitz(p, beta) * (1 + 1e-12));
    EXPECT_LE(smooth_lipschitz(p, beta), compute_bounds(p, 1.0, beta).L);
  }
}

TEST(ComputeBounds, ValueBoundPerSummand) {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = oracle::random_problem(rng, 4, 3, 6, 1.0);
    const double radius = 2.0;
    const auto b = compute_bounds(p, radius, 1.0);
    const double bound = 2.0 * p.dim() * b.Delta * b.Delta / b.mu;
    Vector w0 = oracle::random_vector(rng, 3);
    if (w0.norm() > radius) w0 *= radius / w0.norm();
    for (int k = 0; k < 50; ++k) {
      Vector w = oracle::random_vector(rng, 3);
      if (w.norm() > radius) w *= radius / w.norm();
      for (std::size_t i = 0; i < p.n(); ++i) {
        EXPECT_LE(std::abs(eval_summand(p, i, w) - eval_summand(p, i, w0)), bound);
      }
    }
  }
}

TEST(ComputeBounds, DiameterBoundOnFoundMinimizers) {
  Rng rng(24);
  const std::size_t n = 4;
  const auto p = oracle::random_problem(rng, n, 3, 6, 1.0);
  std::vector<Vector> minimizers;
  for (std::size_t i = 0; i < n; ++i) {
    MinMaxProblem single(1, 3, 6, p.lambda());
    for (std::size_t y = 0; y < 6; ++y) {
      single.slope(0, y) = p.slope(i, y);
      single.offset(0, y) = p.offset(i, y);
    }
    single.shift(0) = p.shift(i);
    const auto sol = reference_solve(single, 50.0, Vector::Zero(3));
    ASSERT_TRUE(sol.converged);
    minimizers.push_back(sol.w);
  }
  // Every minimizer lies in the ball of radius max|a| sqrt(D) / lambda.
  const double radius = p.slopes().cwiseAbs().maxCoeff() * std::sqrt(3.0) / p.lambda();
  const auto b = compute_bounds(p, radius, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      EXPECT_LE((minimizers[i] - minimizers[j]).norm(), 2.0 * std::sqrt(3.0) * b.Delta / b.mu);
    }
  }
}

TEST(BetaForEpsilon, Examples) {
  EXPECT_NEAR(beta_for_epsilon(100, 0.1), 92.10340371976183, 1e-12);
  EXPECT_DOUBLE_EQ(beta_for_epsilon(100, 0.05), 2 * beta_for_epsilon(100, 0.1));
  EXPECT_DOUBLE_EQ(beta_for_epsilon(7, 1.0), 2 * std::log(7.0));
  EXPECT_EQ(beta_for_epsilon(1, 0.1), 1.0);
  EXPECT_EQ(beta_for_epsilon(1, 0.1, 4.0), 4.0);
  EXPECT_THROW(beta_for_epsilon(5, 0.0), std::invalid_argument);
}

TEST(BetaForEpsilon, AchievesTheTolerance) {
  // With beta = 2 log|Y| / eps the smoothing gap is at most eps / 2.
  Rng rng(25);
  const auto p = oracle::random_problem(rng, 5, 3, 40, 1.0);
  const double beta = beta_for_epsilon(40, 0.2);
  for (int k = 0; k < 20; ++k) {
    const Vector w = oracle::random_vector(rng, 3);
    EXPECT_LE(eval_f_beta(p, w, beta) - eval_f(p, w), 0.1 + 1e-12);
  }
}

TEST(ProblemIo, RoundTripIsLossless) {
  Rng rng(26);
  const auto p = oracle::random_problem(rng, 3, 4, 5, 0.3, 1e5);
  const std::string text = problem_to_json(p);
  const auto q = problem_from_json(text);
  EXPECT_EQ(q.n(), 3u);
  EXPECT_EQ(q.dim(), 4u);
  EXPECT_EQ(q.label_count(), 5u);
  EXPECT_EQ(q.lambda(), 0.3);
  EXPECT_EQ(q.slopes(), p.slopes());
  EXPECT_EQ(q.offsets(), p.offsets());
  EXPECT_EQ(q.shifts(), p.shifts());
  EXPECT_EQ(problem_to_json(q), text);
}

TEST(ProblemIo, RejectsMalformed) {
  EXPECT_THROW(problem_from_json("{"), std::invalid_argument);
  EXPECT_THROW(problem_from_json(R"({"n":1,"D":1,"label_count":1,"lambda":0})"), std::invalid_argument);
  EXPECT_THROW(problem_from_json(R"({"n":1,"D":1,"label_count":1,"lambda":0,"a":[[[1,2]]],"b":[[0]],"b_prime":[[0]]})"),
               std::invalid_argument);
}
