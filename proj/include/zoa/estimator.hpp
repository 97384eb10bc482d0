#pragma once

// Zeroth-order gradient estimation: antithetic random gradient-free (RGF)
// estimates over sphere, hyperellipsoid or prior-biased directions; the
// self-guiding and transfer priors; prior-quality (alpha) and gradient-norm
// estimation; and the optimal prior bias lambda.
//
// Sign convention: every attack loss is minimized, and a gradient estimate
// approximates the ascent direction of that loss.

#include "zoa/finite_difference.hpp"
#include "zoa/limit.hpp"
#include "zoa/oracle.hpp"
#include "zoa/sampling.hpp"
#include "zoa/synthetic.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zoa {

struct GradientEstimate {
  Vec vector;
  std::uint64_t queries_spent = 0;
  std::string method;
};

enum class PriorSource { none, self_guiding, transfer };

inline std::string_view to_string(PriorSource s) {
  switch (s) {
  case PriorSource::none: return "none";
  case PriorSource::self_guiding: return "self-guiding";
  case PriorSource::transfer: return "transfer";
  }
  return "?";
}

struct PriorVector {
  Vec v;
  PriorSource source = PriorSource::none;
  std::uint64_t queries_spent = 0;
};

/// Antithetic estimate (1/q) sum_i (L(x + d u_i) - L(x - d u_i)) / (2d) u_i.
template <class Loss>
GradientEstimate estimate_from_directions(Loss&& loss, const Vec& x, double delta, const std::vector<Vec>& dirs,
                                          std::string method) {
  if (!(delta > 0.0)) throw Error("query variance delta must be positive");
  if (dirs.empty()) throw Error("at least one query direction is required");
  GradientEstimate est{Vec::Zero(x.size()), 0, std::move(method)};
  for (const Vec& u : dirs) {
    const double up = loss(Vec(x + delta * u));
    ++est.queries_spent;
    const double down = loss(Vec(x - delta * u));
    ++est.queries_spent;
    est.vector += ((up - down) / (2.0 * delta)) * u;
  }
  est.vector /= static_cast<double>(dirs.size());
  if (!est.vector.allFinite()) throw Error("non-finite gradient estimate");
  return est;
}

template <class Loss>
GradientEstimate rgf_estimate(Loss&& loss, const Vec& x, double delta, std::size_t q, RandomSource& rng) {
  if (q < 1) throw Error("q must be at least 1");
  return estimate_from_directions(loss, x, delta, sample_unit_sphere(x.size(), q, rng), "rgf");
}

/// RGF with directions on the hyperellipsoid inscribed in the limit around x.
template <class Loss>
GradientEstimate limit_aware_rgf(Loss&& loss, const Vec& x, const BoxLimit& limit, double delta, std::size_t q,
                                 ScaleMode mode, RandomSource& rng) {
  if (q < 1) throw Error("q must be at least 1");
  const LimitRanges r = limit_ranges(x, limit);
  const Vec b = scale_vector(r.plus, r.minus, mode);
  if (!(b.array() > 0.0).any()) throw Error("no feasible query direction");
  return estimate_from_directions(loss, x, delta, sample_hyperellipsoid(b, q, rng), "limit-aware-rgf");
}

/// Jacobian-times-discrepancy prior from one extra oracle query:
///   v = sign * |a| (T(x + d a/|a|) - T(x)) / d,  a = T(x) - anchor.
/// For the nullifying loss (anchor x0, sign +1) this approximates J a, which
/// stands in for the gradient 2 J^T a when the Jacobian is close to diagonal.
inline PriorVector self_guiding_prior(const TranslationOracle& oracle, const Vec& x, const Vec& anchor,
                                      const Vec& cached_output, double delta, QueryCounter& counter,
                                      double sign = 1.0) {
  if (!(delta > 0.0)) throw Error("query variance delta must be positive");
  const Vec a = cached_output - anchor;
  const double norm_a = a.norm();
  if (norm_a < 1e-12) return {Vec::Zero(x.size()), PriorSource::none, 0};
  const Vec shifted = translate(oracle, x + (delta / norm_a) * a, counter);
  return {sign * norm_a * (shifted - cached_output) / delta, PriorSource::self_guiding, 1};
}

/// White-box gradient of the surrogate's loss sign * |T_s(x) - anchor|^2.
/// Surrogate evaluations are offline and never counted.
inline PriorVector transfer_prior(const SurrogateModel& surrogate, const Vec& x, const Vec& anchor, double delta,
                                  double sign = 1.0) {
  if (surrogate.model.dim() != x.size() || anchor.size() != x.size())
    throw Error("surrogate dimension does not match");
  auto loss = [&](const Vec& p) { return sign * (surrogate.model.evaluate(p) - anchor).squaredNorm(); };
  return {finite_difference_gradient(loss, x, delta), PriorSource::transfer, 0};
}

struct AlphaEstimate {
  double alpha = 0.0;
  double grad_norm = 0.0;
  bool flat_region = false;
  std::uint64_t queries_spent = 0;
};

/// Cosine between a unit prior and the gradient, plus the gradient norm,
/// from S + 2 forward-difference queries:
///   |grad|^2 ~ N mean_i (dL/drho_i)^2,   alpha = (dL/dv) / |grad|.
template <class Loss>
AlphaEstimate estimate_alpha(Loss&& loss, const Vec& x, const Vec& v_hat, double delta, std::size_t S,
                             RandomSource& rng) {
  if (S < 2) throw Error("S must be at least 2");
  if (!(delta > 0.0)) throw Error("query variance delta must be positive");
  if (std::abs(v_hat.norm() - 1.0) > 1e-9) throw Error("prior direction must be unit length");
  AlphaEstimate out;
  const double base = loss(x);
  ++out.queries_spent;
  double sq = 0.0;
  for (const Vec& rho : sample_unit_sphere(x.size(), S, rng)) {
    const double d = (loss(Vec(x + delta * rho)) - base) / delta;
    ++out.queries_spent;
    sq += d * d;
  }
  const double along = (loss(Vec(x + delta * v_hat)) - base) / delta;
  ++out.queries_spent;
  out.grad_norm = std::sqrt(static_cast<double>(x.size()) * sq / static_cast<double>(S));
  if (out.grad_norm < 1e-12) {
    out.flat_region = true;
    out.alpha = 0.0;
    return out;
  }
  out.alpha = std::clamp(along / out.grad_norm, -1.0, 1.0);
  return out;
}

struct LambdaChoice {
  double lambda = 0.0;
  bool boundary_fallback = false;
};

/// Bias toward the prior minimizing the expected estimation error for q
/// query pairs in dimension N when the prior has cosine alpha to the gradient.
inline LambdaChoice optimal_lambda(double alpha, std::int64_t N, std::int64_t q) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) throw Error("alpha must lie in [-1,1]");
  if (N < 2) throw Error("N must be at least 2");
  if (q < 1) throw Error("q must be at least 1");
  const double a2 = alpha * alpha;
  const double n = static_cast<double>(N);
  const double qq = static_cast<double>(q);
  const double span = n + 2.0 * qq - 2.0;
  if (a2 <= 1.0 / span) return {0.0, false};
  if (a2 >= (2.0 * qq - 1.0) / span) return {1.0, false};
  const double denom = 2.0 * a2 * n * qq - a2 * a2 * n * span - 1.0;
  if (std::abs(denom) < 1e-15) {
    // Nearer boundary by alpha^2 position inside the open interval.
    const double mid = 0.5 * (1.0 / span + (2.0 * qq - 1.0) / span);
    return {a2 < mid ? 0.0 : 1.0, true};
  }
  const double lambda = (1.0 - a2) * (a2 * span - 1.0) / denom;
  return {std::clamp(lambda, 0.0, 1.0), false};
}

/// Unit prior direction whose descent step stays inside the limit around x:
/// normalize, clamp the step -v/|v| taken from x, renormalize, negate back.
/// Without a limit the prior is only normalized. Returns nullopt when nothing
/// survives the clamp.
inline std::optional<Vec> projected_prior_direction(const Vec& v, const Vec& x, const BoxLimit* limit) {
  const double nv = v.norm();
  if (!(nv > 1e-12) || !v.allFinite()) return std::nullopt;
  Vec dir = v / nv;
  if (limit != nullptr) {
    dir = -project_step(x, Vec(-dir), *limit);
    const double nd = dir.norm();
    if (!(nd > 1e-12)) return std::nullopt;
    dir /= nd;
  }
  return dir;
}

/// Query directions u_i = sqrt(lambda) v + sqrt(1 - lambda) t_i / |t_i| with
/// t_i the component of xi_i orthogonal to v. xi_i is drawn on the
/// hyperellipsoid with semi-axes b, or on the unit sphere when b is empty.
inline std::vector<Vec> prior_guided_samples(const Vec& v_hat, double lambda, const Vec& b, std::size_t q,
                                             RandomSource& rng) {
  const double nv = v_hat.norm();
  if (!(nv > 0.0 && nv <= 1.0 + 1e-12)) throw Error("prior direction norm must lie in (0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0,1]");
  const Vec unit = v_hat / nv;
  const double along = std::sqrt(lambda);
  const double across = std::sqrt(1.0 - lambda);
  std::vector<Vec> out;
  out.reserve(q);
  for (std::size_t k = 0; k < q; ++k) {
    if (across == 0.0) {
      out.push_back(along * v_hat);
      continue;
    }
    Vec t;
    int tries = 0;
    for (;;) {
      const Vec xi = b.size() == 0 ? sample_unit_sphere(v_hat.size(), 1, rng).front()
                                   : sample_hyperellipsoid(b, 1, rng).front();
      t = xi - unit.dot(xi) * unit;
      const double nt = t.norm();
      if (nt > 1e-12 * std::max(1.0, xi.norm())) {
        t /= nt;
        break;
      }
      if (++tries >= 100) throw Error("could not draw a query direction orthogonal to the prior");
    }
    out.push_back(along * v_hat + across * t);
  }
  return out;
}

} // namespace zoa
