#pragma once

#include <cmath>
#include <limits>

#include "rjpo/linop.hpp"

namespace rjpo {

template <typename Scalar>
struct CgOutcome {
  Vector<Scalar> solution;
  int iterations = 0;
  /// ||residual|| / ||b||, from the recomputed residual.
  Scalar relative_residual = 0;
  /// b - Q * solution, recomputed explicitly after the last iteration.
  Vector<Scalar> residual;
};

/// Iteration cap used when the caller passes max_iters <= 0.
inline int default_max_iterations(Index n) { return static_cast<int>(10 * n); }

/// Linear conjugate gradient for Q x = b started from x0.
///
/// Stops at the first iterate whose relative residual ||b - Q x|| / ||b|| is at
/// most `epsilon` (tested on the recursively updated residual, including before
/// the first iteration) or after `max_iters` iterations. The returned residual
/// is always recomputed from the final iterate. With ||b|| = 0 the call returns
/// x0 after zero iterations with relative residual 0.
///
/// Throws CgBreakdown when p'Qp is not positive or a non-finite value appears,
/// unless the recursive residual is already below rounding level.
template <typename Scalar>
CgOutcome<Scalar> cg_solve(const FactoredPrecision<Scalar>& q,
                           const Eigen::Ref<const Vector<Scalar>>& b,
                           const Eigen::Ref<const Vector<Scalar>>& x0, Scalar epsilon,
                           int max_iters = 0) {
  const Index n = q.dim();
  if (b.size() != n || x0.size() != n) throw ArgumentError("cg_solve: dimension mismatch");
  if (!(epsilon >= Scalar(0))) throw ArgumentError("cg_solve: epsilon must be nonnegative");
  if (!b.allFinite() || !x0.allFinite()) throw ArgumentError("cg_solve: non-finite input");
  if (max_iters <= 0) max_iters = default_max_iterations(n);

  CgOutcome<Scalar> out;
  out.solution = x0;
  const Scalar b_norm = b.norm();
  if (b_norm == Scalar(0)) {
    out.residual = b - q.apply(out.solution);
    out.relative_residual = 0;
    return out;
  }

  Vector<Scalar>& x = out.solution;
  Vector<Scalar> r = b - q.apply(x);
  Vector<Scalar> p = r;
  Vector<Scalar> qp(n);
  Scalar rr = r.squaredNorm();
  const Scalar threshold = epsilon * b_norm;

  int k = 0;
  if (std::sqrt(rr) > threshold) {
    for (k = 1; k <= max_iters; ++k) {
      if (rr == Scalar(0)) {
        // Exact solution reached before the iteration budget; nothing left to do.
        k -= 1;
        break;
      }
      q.apply_into(p, qp);
      const Scalar pqp = p.dot(qp);
      if (!(pqp > Scalar(0)) || !std::isfinite(pqp)) {
        // epsilon = 0 runs past convergence until p'Qp underflows
        if (std::isfinite(pqp) && std::sqrt(rr) <= std::numeric_limits<Scalar>::epsilon() * b_norm) {
          k -= 1;
          break;
        }
        throw CgBreakdown(k, "p'Qp is not positive (matrix not positive definite?)");
      }
      const Scalar step = rr / pqp;
      x.noalias() += step * p;
      r.noalias() -= step * qp;
      const Scalar rr_next = r.squaredNorm();
      if (!std::isfinite(rr_next)) throw CgBreakdown(k, "non-finite residual");
      if (std::sqrt(rr_next) <= threshold) {
        rr = rr_next;
        break;
      }
      p = r + (rr_next / rr) * p;
      rr = rr_next;
    }
    if (k > max_iters) k = max_iters;
  }

  out.iterations = k;
  out.residual = b - q.apply(x);
  out.relative_residual = out.residual.norm() / b_norm;
  if (!std::isfinite(out.relative_residual)) throw CgBreakdown(k, "non-finite final residual");
  return out;
}

}  // namespace rjpo
