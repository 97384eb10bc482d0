#pragma once

#include "zoa/core.hpp"

namespace zoa {

/// 100 * (1 - |T(x*) - x0|^2 / |y0 - x0|^2). Equals 100 iff the output is the
/// clean input and 0 when the output is the clean translation.
inline double nullifying_score(const Vec& output, const Vec& x0, const Vec& y0) {
  const double reference = (y0 - x0).squaredNorm();
  if (!(std::sqrt(reference) > 1e-12)) throw Error("threat model is identity on this input");
  return (1.0 - (output - x0).squaredNorm() / reference) * 100.0;
}

/// 100 * |T(x*) - y0|^2 / |y0 - x0|^2: output displacement from the clean
/// translation, relative to how far the translation moved the input.
inline double distortion_score(const Vec& output, const Vec& x0, const Vec& y0) {
  const double reference = (y0 - x0).squaredNorm();
  if (!(std::sqrt(reference) > 1e-12)) throw Error("threat model is identity on this input");
  return (output - y0).squaredNorm() / reference * 100.0;
}

} // namespace zoa
