#pragma once

// Brute-force reference oracles. Their evaluations never touch an attack's
// QueryCounter.

#include "zoa/oracle.hpp"

#include <string>

namespace zoa {

inline constexpr Eigen::Index kJacobianMaxDim = 256;

/// Central differences, 2N loss evaluations.
template <class Loss>
Vec finite_difference_gradient(Loss&& loss, const Vec& x, double h) {
  if (!(h > 0.0)) throw Error("finite-difference step must be positive");
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = loss(probe);
    probe[i] = x[i] - h;
    const double down = loss(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw Error("non-finite loss at coordinate " + std::to_string(i));
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Forward-difference response columns (T(x + h e_i) - T(x)) / h.
inline Mat finite_difference_jacobian(const TranslationOracle& oracle, const Vec& x, double h) {
  if (x.size() > kJacobianMaxDim) throw Error("Jacobian oracle is desk-scale only");
  if (!(h > 0.0)) throw Error("finite-difference step must be positive");
  const Vec base = oracle.evaluate(x);
  Mat jac(base.size(), x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    jac.col(i) = (oracle.evaluate(probe) - base) / h;
    probe[i] = x[i];
  }
  return jac;
}

/// Fraction of squared Frobenius mass on the diagonal.
inline double diagonality_metric(const Mat& jac) {
  if (jac.rows() != jac.cols()) throw Error("diagonality needs a square matrix");
  const double total = jac.squaredNorm();
  if (!(total > 0.0)) throw Error("degenerate Jacobian");
  return jac.diagonal().squaredNorm() / total;
}

} // namespace zoa
