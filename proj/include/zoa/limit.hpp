#pragma once

#include "zoa/core.hpp"

#include <algorithm>
#include <string_view>

namespace zoa {

/// Per-coordinate bounds of the feasible set: the unit box intersected with
/// the l-infinity ball of radius epsilon around the clean input.
class BoxLimit {
public:
  BoxLimit(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.size() == 0)
      throw Error("limit bounds must have equal nonzero length");
    require_finite(lo_);
    require_finite(hi_);
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (!(0.0 <= lo_[i] && lo_[i] <= hi_[i] && hi_[i] <= 1.0))
        throw Error("invalid limit at coordinate " + std::to_string(i));
    }
  }

  static BoxLimit around(const Vec& x0, double epsilon) {
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
    require_finite(x0);
    Vec lo = (x0.array() - epsilon).max(0.0).matrix();
    Vec hi = (x0.array() + epsilon).min(1.0).matrix();
    return BoxLimit(std::move(lo), std::move(hi));
  }

  const Vec& lo() const noexcept { return lo_; }
  const Vec& hi() const noexcept { return hi_; }
  Eigen::Index size() const noexcept { return lo_.size(); }

  bool contains(const Vec& x, double tol = kFeasibilityTol) const {
    if (x.size() != size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo_[i] - tol && x[i] <= hi_[i] + tol)) return false;
    return true;
  }

  /// Largest violation of the bounds (0 when feasible).
  double violation(const Vec& x) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      worst = std::max({worst, lo_[i] - x[i], x[i] - hi_[i]});
    return worst;
  }

private:
  Vec lo_;
  Vec hi_;
};

inline Vec project(const Vec& x, const BoxLimit& limit) {
  require_finite(x);
  if (x.size() != limit.size()) throw Error("dimension mismatch in project");
  return x.cwiseMax(limit.lo()).cwiseMin(limit.hi());
}

struct LimitRanges {
  Vec plus;  // room to increase each coordinate
  Vec minus; // room to decrease each coordinate
};

/// Adjustment ranges measured from the current iterate.
inline LimitRanges limit_ranges(const Vec& x, const BoxLimit& limit) {
  if (x.size() != limit.size()) throw Error("dimension mismatch in limit_ranges");
  if (limit.violation(x) > kFeasibilityTol) throw Error("iterate escaped limit");
  return {(limit.hi() - x).cwiseMax(0.0), (x - limit.lo()).cwiseMax(0.0)};
}

enum class ScaleMode { min, mean };

inline std::string_view to_string(ScaleMode m) { return m == ScaleMode::min ? "min" : "mean"; }

inline ScaleMode parse_scale_mode(std::string_view s) {
  if (s == "min") return ScaleMode::min;
  if (s == "mean") return ScaleMode::mean;
  throw Error("unknown scale mode: " + std::string(s));
}

/// Symmetric per-coordinate half-width of the query ellipsoid.
/// `min` is the only reading under which both antithetic probes stay feasible.
inline Vec scale_vector(const Vec& omega_plus, const Vec& omega_minus, ScaleMode mode) {
  if (omega_plus.size() != omega_minus.size()) throw Error("dimension mismatch in scale_vector");
  if ((omega_plus.array() < 0.0).any() || (omega_minus.array() < 0.0).any())
    throw Error("limit ranges must be nonnegative");
  if (mode == ScaleMode::min) return omega_plus.cwiseMin(omega_minus);
  return 0.5 * (omega_plus + omega_minus);
}

/// Clamp a displacement taken from x into the limit, in the iterate frame.
inline Vec project_step(const Vec& x, const Vec& step, const BoxLimit& limit) {
  return project(x + step, limit) - x;
}

} // namespace zoa
