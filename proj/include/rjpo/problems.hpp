#pragma once

#include "rjpo/linop.hpp"
#include "rjpo/rng.hpp"

namespace rjpo {

/// Gaussian with first-order autoregressive covariance R_ij = sigma2 rho^|i-j|
/// and mean entries drawn from U[0, 10].
struct ToyProblem {
  GaussianTarget<double> target;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct ToyParameters {
  Index n = 20;
  double sigma2 = 1.0;
  double rho = 0.8;
};

/// R is inverted once to a dense Q; the factored precision uses the transposed
/// Cholesky factor of Q (Q = L L', F = L'). Draws the mean from `stream`.
ToyProblem make_ar1_problem(const ToyParameters& params, RngStream& stream);

}  // namespace rjpo
