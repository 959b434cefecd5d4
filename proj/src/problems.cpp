#include "rjpo/problems.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace rjpo {

ToyProblem make_ar1_problem(const ToyParameters& params, RngStream& stream) {
  if (params.n < 1) throw ConfigError("toy problem: N must be positive");
  if (!(params.sigma2 > 0.0)) throw ConfigError("toy problem: sigma2 must be positive");
  if (!(params.rho > -1.0 && params.rho < 1.0)) throw ConfigError("toy problem: rho must lie in (-1, 1)");

  const Index n = params.n;
  Eigen::MatrixXd r(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      r(i, j) = params.sigma2 * std::pow(params.rho, static_cast<double>(std::abs(i - j)));

  Eigen::VectorXd mu(n);
  for (Index i = 0; i < n; ++i) mu[i] = 10.0 * stream.uniform();

  Eigen::MatrixXd q = r.llt().solve(Eigen::MatrixXd::Identity(n, n));
  q = 0.5 * (q + q.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> chol(q);
  if (chol.info() != Eigen::Success) throw NumericalError("toy problem: Q is not positive definite");
  Eigen::MatrixXd factor = chol.matrixU();

  auto mirror = std::make_shared<const DenseMirror<double>>(q, mu);
  Eigen::VectorXd potential = q * mu;
  GaussianTarget<double> target(FactoredPrecision<double>(dense_operator<double>(std::move(factor))),
                                std::move(potential), std::move(mirror));
  return {std::move(target), std::move(mu), std::move(r)};
}

}  // namespace rjpo
