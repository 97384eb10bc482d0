#pragma once

#include "zoa/core.hpp"

#include <vector>

namespace zoa {

namespace detail {

// Normalized Gaussian draw over the coordinates selected by `active`.
// A zero-norm draw is redrawn; with doubles this is practically unreachable.
inline Vec gaussian_direction(Eigen::Index n, RandomSource& rng,
                              const std::vector<Eigen::Index>* active = nullptr) {
  Vec u = Vec::Zero(n);
  for (;;) {
    double sq = 0.0;
    if (active == nullptr) {
      for (Eigen::Index i = 0; i < n; ++i) {
        u[i] = rng.normal();
        sq += u[i] * u[i];
      }
    } else {
      for (Eigen::Index i : *active) {
        u[i] = rng.normal();
        sq += u[i] * u[i];
      }
    }
    if (sq > 0.0) return u / std::sqrt(sq);
  }
}

} // namespace detail

/// Uniform samples on the unit sphere in R^n.
inline std::vector<Vec> sample_unit_sphere(Eigen::Index n, std::size_t count, RandomSource& rng) {
  if (n < 1) throw Error("sphere dimension must be positive");
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(detail::gaussian_direction(n, rng));
  return out;
}

/// Samples b (.) u on the axis-aligned hyperellipsoid with semi-axes b.
/// Axes with b_i = 0 are frozen; the sphere is drawn over the free axes only
/// so that sum xi_i^2 / b_i^2 = 1 holds exactly. With no frozen axis the
/// random stream matches sample_unit_sphere.
inline std::vector<Vec> sample_hyperellipsoid(const Vec& b, std::size_t count, RandomSource& rng) {
  if ((b.array() < 0.0).any() || !b.allFinite()) throw Error("scale vector must be nonnegative");
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (b[i] > 0.0) active.push_back(i);
  if (active.empty()) throw Error("fully frozen iterate");

  const bool all_free = static_cast<Eigen::Index>(active.size()) == b.size();
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vec u = all_free ? detail::gaussian_direction(b.size(), rng)
                     : detail::gaussian_direction(b.size(), rng, &active);
    out.push_back(b.cwiseProduct(u));
  }
  return out;
}

} // namespace zoa
