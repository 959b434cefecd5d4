#pragma once

#include <cmath>

#include <Eigen/Cholesky>

#include "rjpo/sampler.hpp"

namespace rjpo {

/// Auxiliary-variable law z ~ N(A x + b, B) for the dense reversible-jump move
/// x -> -x + f(z). Oracle use only (dense, small N).
template <typename Scalar>
struct GeneralMoveSpec {
  Matrix<Scalar> a;
  Matrix<Scalar> b_cov;
  Vector<Scalar> b;

  GeneralMoveSpec(Matrix<Scalar> a_, Matrix<Scalar> b_cov_, Vector<Scalar> b_)
      : a(std::move(a_)), b_cov(std::move(b_cov_)), b(std::move(b_)), b_chol_(b_cov) {
    const Index n = a.rows();
    if (a.cols() != n || b_cov.rows() != n || b_cov.cols() != n || b.size() != n)
      throw ConfigError("general move: A, B, b must be N x N, N x N and N");
    if (!b_cov.isApprox(b_cov.transpose()) || b_chol_.info() != Eigen::Success)
      throw ConfigError("general move: B is not symmetric positive definite");
    b_inv_a_ = b_chol_.solve(a);
    gram_ = a.transpose() * b_inv_a_;
  }

  Index dim() const { return a.rows(); }
  const Eigen::LLT<Matrix<Scalar>>& b_cholesky() const { return b_chol_; }
  /// A' B^-1 A.
  const Matrix<Scalar>& gram() const { return gram_; }
  /// A' B^-1 v.
  Vector<Scalar> at_binv(const Eigen::Ref<const Vector<Scalar>>& v) const {
    return a.transpose() * b_chol_.solve(v);
  }

 private:
  Eigen::LLT<Matrix<Scalar>> b_chol_;
  Matrix<Scalar> b_inv_a_;
  Matrix<Scalar> gram_;
};

/// r(z) = Q mu + A'B^-1 (z - b) - 1/2 (Q + A'B^-1 A) f(z).
template <typename Scalar>
Vector<Scalar> general_move_residual(const DenseMirror<Scalar>& target,
                                     const GeneralMoveSpec<Scalar>& spec,
                                     const Eigen::Ref<const Vector<Scalar>>& z,
                                     const Eigen::Ref<const Vector<Scalar>>& f) {
  const Vector<Scalar> qmu = target.precision * target.mean;
  return qmu + spec.at_binv(z - spec.b) -
         Scalar(0.5) * ((target.precision + spec.gram()) * f);
}

/// Exact solution of 1/2 (Q + A'B^-1 A) f = Q mu + A'B^-1 (z - b).
template <typename Scalar>
Vector<Scalar> general_move_exact_f(const DenseMirror<Scalar>& target,
                                    const GeneralMoveSpec<Scalar>& spec,
                                    const Eigen::Ref<const Vector<Scalar>>& z) {
  const Matrix<Scalar> half_sum = Scalar(0.5) * (target.precision + spec.gram());
  const Vector<Scalar> rhs = target.precision * target.mean + spec.at_binv(z - spec.b);
  return half_sum.llt().solve(rhs);
}

/// log [P_X(x) P_Z(z | x) / (P_X(prev) P_Z(z | prev))], evaluated from the two
/// Gaussian densities directly (unit Jacobian, s = z).
template <typename Scalar>
Scalar general_move_log_ratio(const DenseMirror<Scalar>& target,
                              const GeneralMoveSpec<Scalar>& spec,
                              const Eigen::Ref<const Vector<Scalar>>& previous,
                              const Eigen::Ref<const Vector<Scalar>>& proposal,
                              const Eigen::Ref<const Vector<Scalar>>& z) {
  const auto log_px = [&](const Vector<Scalar>& x) {
    const Vector<Scalar> d = x - target.mean;
    return Scalar(-0.5) * d.dot(target.precision * d);
  };
  const auto log_pz = [&](const Vector<Scalar>& x) {
    const Vector<Scalar> d = z - spec.a * x - spec.b;
    return Scalar(-0.5) * d.dot(spec.b_cholesky().solve(d));
  };
  const Vector<Scalar> prev = previous;
  const Vector<Scalar> prop = proposal;
  return (log_px(prop) + log_pz(prop)) - (log_px(prev) + log_pz(prev));
}

/// One dense reversible-jump step with the exact f(z); acceptance from the
/// residual formula (equal to one up to rounding).
template <typename Scalar>
KernelOutcome<Scalar> general_rj_step_oracle(const DenseMirror<Scalar>& target,
                                             const GeneralMoveSpec<Scalar>& spec,
                                             const Eigen::Ref<const Vector<Scalar>>& previous,
                                             RngStream& stream) {
  const Index n = target.mean.size();
  if (spec.dim() != n || previous.size() != n)
    throw ArgumentError("general_rj_step_oracle: dimension mismatch");
  const Vector<Scalar> omega = stream.standard_normal_vector<Scalar>(n);
  const Vector<Scalar> z =
      spec.a * previous + spec.b + spec.b_cholesky().matrixL() * omega;
  const Vector<Scalar> f = general_move_exact_f<Scalar>(target, spec, z);
  KernelOutcome<Scalar> out;
  out.proposal = -previous + f;
  const Vector<Scalar> r = general_move_residual<Scalar>(target, spec, z, f);
  const Scalar log_alpha = log_acceptance<Scalar>(r, previous, out.proposal);
  out.acceptance_probability = std::exp(log_alpha);
  out.relative_residual = r.norm() / (target.precision * target.mean + spec.at_binv(z - spec.b)).norm();
  out.accepted = std::log(stream.uniform()) < static_cast<double>(log_alpha);
  out.next_sample = out.accepted ? out.proposal : Vector<Scalar>(previous);
  return out;
}

}  // namespace rjpo
