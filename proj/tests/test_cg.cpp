#include <gtest/gtest.h>

#include <limits>

#include <Eigen/QR>

#include "rjpo/cg.hpp"
#include "rjpo/errors.hpp"
#include "test_util.hpp"

using namespace rjpo;
using rjpo::testing::random_matrix;
using rjpo::testing::random_vector;

namespace {

FactoredPrecision<double> random_precision(Index n, RngStream& s) {
  return FactoredPrecision<double>(dense_operator<double>(random_matrix(n + 3, n, s)));
}

}  // namespace

TEST(Cg, SolvesToMachinePrecision) {
  RngStream s(1);
  const auto q = random_precision(12, s);
  const Eigen::VectorXd b = random_vector(12, s);
  const Eigen::VectorXd want = q.to_dense().llt().solve(b);
  const auto out = cg_solve<double>(q, b, Eigen::VectorXd::Zero(12), 1e-13);
  EXPECT_LT((out.solution - want).norm(), 1e-9 * want.norm());
  EXPECT_LE(out.relative_residual, 1e-12);
}

TEST(Cg, StopsAtThresholdAndRecomputesResidual) {
  RngStream s(2);
  const auto q = random_precision(30, s);
  const Eigen::VectorXd b = random_vector(30, s);
  const auto loose = cg_solve<double>(q, b, Eigen::VectorXd::Zero(30), 1e-2);
  const auto tight = cg_solve<double>(q, b, Eigen::VectorXd::Zero(30), 1e-8);
  EXPECT_LT(loose.iterations, tight.iterations);
  EXPECT_GT(loose.iterations, 0);
  // the explicit residual, not the recursion
  const Eigen::VectorXd r = b - q.apply(loose.solution);
  EXPECT_LT((loose.residual - r).norm(), 1e-14 * b.norm());
  EXPECT_NEAR(loose.relative_residual, r.norm() / b.norm(), 1e-14);
  EXPECT_LE(loose.relative_residual, 1.01e-2);
}

TEST(Cg, OneFewerIterationMissesThreshold) {
  RngStream s(3);
  const auto q = random_precision(25, s);
  const Eigen::VectorXd b = random_vector(25, s);
  const auto out = cg_solve<double>(q, b, Eigen::VectorXd::Zero(25), 1e-4);
  ASSERT_GT(out.iterations, 1);
  const auto capped = cg_solve<double>(q, b, Eigen::VectorXd::Zero(25), 1e-4, out.iterations - 1);
  EXPECT_EQ(capped.iterations, out.iterations - 1);
  EXPECT_GT(capped.relative_residual, 1e-4);
}

TEST(Cg, ZeroRightHandSideReturnsStart) {
  RngStream s(4);
  const auto q = random_precision(5, s);
  const Eigen::VectorXd x0 = random_vector(5, s);
  const auto out = cg_solve<double>(q, Eigen::VectorXd::Zero(5), x0, 1e-6);
  EXPECT_EQ(out.iterations, 0);
  EXPECT_EQ(out.solution, x0);
  EXPECT_EQ(out.relative_residual, 0.0);
}

TEST(Cg, ExactStartNeedsNoIterations) {
  RngStream s(5);
  const auto q = random_precision(6, s);
  const Eigen::VectorXd x = random_vector(6, s);
  const auto out = cg_solve<double>(q, q.apply(x), x, 1e-8);
  EXPECT_EQ(out.iterations, 0);
}

TEST(Cg, IdentityConvergesInOneStep) {
  FactoredPrecision<double> q(dense_operator<double>(Eigen::MatrixXd::Identity(4, 4)));
  Eigen::VectorXd b(4);
  b << 1, 2, 3, 4;
  const auto out = cg_solve<double>(q, b, Eigen::VectorXd::Zero(4), 0.0);
  EXPECT_EQ(out.iterations, 1);
  EXPECT_LT((out.solution - b).norm(), 1e-15);
}

TEST(Cg, BreakdownOnSingularDirection) {
  // Q = [1 1; 1 1], b in its null space
  Eigen::MatrixXd f(1, 2);
  f << 1, 1;
  FactoredPrecision<double> q(dense_operator<double>(f));
  Eigen::VectorXd b(2);
  b << 1, -1;
  EXPECT_THROW(cg_solve<double>(q, b, Eigen::VectorXd::Zero(2), 1e-8), CgBreakdown);
}

TEST(Cg, RejectsBadArguments) {
  FactoredPrecision<double> q(dense_operator<double>(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_THROW(cg_solve<double>(q, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(3), 1e-3),
               ArgumentError);
  EXPECT_THROW(cg_solve<double>(q, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3), -1.0),
               ArgumentError);
}

TEST(Cg, FloatInstantiation) {
  RngStream s(6);
  const Eigen::MatrixXd f = random_matrix(10, 8, s);
  FactoredPrecision<float> q(dense_operator<float>(f.cast<float>()));
  const Eigen::VectorXf b = s.standard_normal_vector<float>(8);
  const auto out = cg_solve<float>(q, b, Eigen::VectorXf::Zero(8), 1e-4f);
  EXPECT_LE(out.relative_residual, 2e-4f);
}

TEST(Cg, TwoByTwoTerminatesInTwoSteps) {
  // Q = [4 1; 1 3] = L L'
  Eigen::MatrixXd q(2, 2);
  q << 4, 1, 1, 3;
  const Eigen::MatrixXd f = Eigen::LLT<Eigen::MatrixXd>(q).matrixU();
  FactoredPrecision<double> p(dense_operator<double>(f));
  Eigen::VectorXd b(2), want(2);
  b << 1, 2;
  want << 1.0 / 11.0, 7.0 / 11.0;
  const auto out = cg_solve<double>(p, b, Eigen::VectorXd::Zero(2), 1e-14);
  EXPECT_LE(out.iterations, 2);
  EXPECT_LT((out.solution - want).norm(), 1e-14);
}

TEST(Cg, UnitThresholdMetAtStart) {
  RngStream s(7);
  const auto q = random_precision(5, s);
  const auto out = cg_solve<double>(q, random_vector(5, s), Eigen::VectorXd::Zero(5), 1.0);
  EXPECT_EQ(out.iterations, 0);
  EXPECT_EQ(out.solution, Eigen::VectorXd::Zero(5));
}

TEST(Cg, EnergyErrorNonIncreasing) {
  RngStream s(8);
  for (Index n : {8, 32, 64}) {
    const auto q = random_precision(n, s);
    const Eigen::MatrixXd qd = q.to_dense();
    const Eigen::VectorXd b = random_vector(n, s);
    const Eigen::VectorXd star = qd.llt().solve(b);
    double last = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) {
      const auto out = cg_solve<double>(q, b, Eigen::VectorXd::Zero(n), 0.0, k);
      const Eigen::VectorXd e = out.solution - star;
      const double err = std::sqrt(e.dot(qd * e));
      ASSERT_LE(err, last * (1 + 1e-10) + 1e-12) << "n " << n << " k " << k;
      last = err;
    }
  }
}

TEST(Cg, ZeroThresholdReachesDenseSolve) {
  RngStream s(9);
  const Index n = 40;
  // eigenvalues evenly spread over [1, 1e4]; clustered-at-both-ends spectra lose
  // orthogonality and need more than N steps in floating point
  const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(n, n, s)).householderQ();
  const Eigen::VectorXd lambda = Eigen::VectorXd::LinSpaced(n, 1.0, 1e4).cwiseSqrt();
  const Eigen::MatrixXd f = lambda.asDiagonal() * u.transpose();
  FactoredPrecision<double> q(dense_operator<double>(f));
  const Eigen::VectorXd b = random_vector(n, s);
  const Eigen::VectorXd star = q.to_dense().llt().solve(b);
  const auto out = cg_solve<double>(q, b, Eigen::VectorXd::Zero(n), 0.0, static_cast<int>(n));
  EXPECT_LT((out.solution - star).norm(), 1e-8 * star.norm());
  // running past convergence stops quietly
  const auto longer = cg_solve<double>(q, b, Eigen::VectorXd::Zero(n), 0.0);
  EXPECT_LT((longer.solution - star).norm(), 1e-8 * star.norm());
}
