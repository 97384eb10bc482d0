#pragma once

// Projected-gradient attack loop over zeroth-order estimates, with optional
// limit-aware queries, prior-biased queries and gradient sliding.

#include "zoa/estimator.hpp"
#include "zoa/limit.hpp"
#include "zoa/metrics.hpp"

#include <array>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace zoa {

enum class Variant { RGF, GSA, S_RGF, S_GSA, LaS_RGF, LaS_GSA, Prior_RGF };

inline constexpr std::array<Variant, 7> kAllVariants{Variant::RGF,     Variant::GSA,     Variant::S_RGF,
                                                     Variant::S_GSA,   Variant::LaS_RGF, Variant::LaS_GSA,
                                                     Variant::Prior_RGF};

inline std::string_view to_string(Variant v) {
  switch (v) {
  case Variant::RGF: return "RGF";
  case Variant::GSA: return "GSA";
  case Variant::S_RGF: return "S-RGF";
  case Variant::S_GSA: return "S-GSA";
  case Variant::LaS_RGF: return "LaS-RGF";
  case Variant::LaS_GSA: return "LaS-GSA";
  case Variant::Prior_RGF: return "Prior-RGF";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : kAllVariants)
    if (to_string(v) == s) return v;
  throw Error("unknown variant: " + std::string(s));
}

struct VariantFlags {
  bool ellipsoid = false; // limit-aware query directions
  PriorSource prior = PriorSource::none;
  bool slide = false;     // gradient sliding after each step

  bool operator==(const VariantFlags&) const = default;
};

inline VariantFlags variant_wiring(Variant v) {
  switch (v) {
  case Variant::RGF: return {false, PriorSource::none, false};
  case Variant::GSA: return {false, PriorSource::none, true};
  case Variant::S_RGF: return {false, PriorSource::self_guiding, false};
  case Variant::S_GSA: return {false, PriorSource::self_guiding, true};
  case Variant::LaS_RGF: return {true, PriorSource::self_guiding, false};
  case Variant::LaS_GSA: return {true, PriorSource::self_guiding, true};
  case Variant::Prior_RGF: return {false, PriorSource::transfer, false};
  }
  throw Error("unknown variant");
}

enum class LossKind { nullify, distort };

inline std::string_view to_string(LossKind k) { return k == LossKind::nullify ? "nullify" : "distort"; }

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "nullify") return LossKind::nullify;
  if (s == "distort") return LossKind::distort;
  throw Error("unknown loss kind: " + std::string(s));
}

struct AttackConfig {
  double delta = 0.001;
  double epsilon = 0.1;
  double eta = 1.0;
  std::uint64_t q = 8;
  std::uint64_t S = 10;
  std::uint64_t R = 10; // alpha/lambda refresh period in iterations
  std::uint64_t budget = 100000;
  double threshold = 75.0;
  Variant variant = Variant::LaS_GSA;
  LossKind loss = LossKind::nullify;
  ScaleMode scale_mode = ScaleMode::min;
  std::uint64_t max_slide_steps = 20;
  std::uint64_t stall_retries = 3;
  double surrogate_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(delta > 0.0)) throw Error("delta must be positive");
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
    if (!(eta > 0.0)) throw Error("eta must be positive");
    if (!(threshold > 0.0 && threshold <= 100.0)) throw Error("threshold must lie in (0,100]");
    if (q < 1) throw Error("q must be at least 1");
    if (S < 2) throw Error("S must be at least 2");
    if (R < 1) throw Error("R must be at least 1");
    if (budget < 1) throw Error("budget must be positive");
    if (max_slide_steps < 1) throw Error("max_slide_steps must be at least 1");
    if (!(surrogate_scale >= 0.0)) throw Error("surrogate_scale must be nonnegative");
  }
};

struct LossEval {
  double loss;
  Vec output;
};

/// |T(x) - x0|^2, one query. The output is returned for reuse by the prior.
inline LossEval nullifying_loss(const TranslationOracle& oracle, const Vec& x, const Vec& x0, QueryCounter& counter) {
  Vec out = translate(oracle, x, counter);
  const double l = (out - x0).squaredNorm();
  return {l, std::move(out)};
}

/// -|T(x) - y0|^2, one query. Minimizing pushes the output away from y0.
inline LossEval distorting_loss(const TranslationOracle& oracle, const Vec& x, const Vec& y0, QueryCounter& counter) {
  Vec out = translate(oracle, x, counter);
  const double l = -(out - y0).squaredNorm();
  return {l, std::move(out)};
}

/// x_{t+1} = Pi(x_t - eta g / |g|).
inline Vec pgd_step(const Vec& x, const GradientEstimate& estimate, double eta, const BoxLimit& limit) {
  const double n = estimate.vector.norm();
  if (!(n > 1e-12)) throw Error("vanishing gradient estimate");
  return project(Vec(x - (eta / n) * estimate.vector), limit);
}

struct SlideResult {
  Vec final;
  std::uint64_t steps = 0;   // sliding points computed after the start point
  double recovered = 0.0;    // realized trajectory length
  bool trapped = false;      // direction degenerated before the length was recovered
};

/// Extends a projection-shortened step along the limit boundary until the
/// realized path length reaches `length` or `max_steps` points are placed:
///   s_i = P(s_{i-1} + l_i (s_{i-1} - s_{i-2}) / |s_{i-1} - s_{i-2}|),
///   l_i = length - sum of realized segment lengths so far.
/// Makes no oracle queries. `projector` is the projection P onto the limit.
template <class Projector>
SlideResult gradient_slide_with(const Vec& start, const Vec& projected_step, double length, Projector&& projector,
                                std::uint64_t max_steps, const std::function<void(const Vec&)>& on_point = {}) {
  if (max_steps < 1) throw Error("max_steps must be at least 1");
  SlideResult r;
  Vec prev = start;
  Vec cur = projected_step;
  r.recovered = (cur - prev).norm();
  r.steps = 1;
  if (on_point) on_point(cur);
  const double tol = 1e-12 * std::max(1.0, length);
  while (r.steps < max_steps) {
    const double remaining = length - r.recovered;
    if (remaining <= tol) break;
    const Vec dir = cur - prev;
    const double nd = dir.norm();
    if (nd < 1e-12) {
      r.trapped = true;
      break;
    }
    Vec next = projector(Vec(cur + (remaining / nd) * dir));
    r.recovered += (next - cur).norm();
    prev = std::move(cur);
    cur = std::move(next);
    ++r.steps;
    if (on_point) on_point(cur);
  }
  r.final = std::move(cur);
  return r;
}

inline SlideResult gradient_slide(const Vec& start, const Vec& projected_step, double length, const BoxLimit& limit,
                                  std::uint64_t max_steps, const std::function<void(const Vec&)>& on_point = {}) {
  return gradient_slide_with(
      start, projected_step, length, [&](const Vec& v) { return project(v, limit); }, max_steps, on_point);
}

struct StepRecord {
  std::uint64_t iteration = 0;
  std::uint64_t queries_total = 0;
  double loss_value = 0.0;
  double score = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  std::uint64_t slide_steps_taken = 0;
  double slide_length_recovered = 0.0;
};

struct AttackResult {
  bool success = false;
  double final_score = 0.0;
  double best_score = 0.0;
  std::uint64_t queries = 0;
  std::uint64_t iterations = 0;
  Vec x_adv;
  Vec output;
  Vec y0;
  std::string stop_reason;
};

struct AttackOutcome {
  AttackResult result;
  std::vector<StepRecord> trace;
};

/// Optional taps into a run, used by the verification suites.
struct AttackObserver {
  std::function<void(const Vec&)> on_iterate;
  std::function<void(const Vec&)> on_slide_point;
  std::function<void(std::uint64_t before, std::uint64_t after)> on_slide_queries;
};

struct AttackState {
  Vec x_star;
  std::uint64_t iteration = 0;
  QueryCounter counter;
  double best_score = -std::numeric_limits<double>::infinity();
  Vec cached_output;
};

/// Runs one attack from x0 until the score exceeds the threshold or the query
/// budget is spent. Every oracle evaluation is counted. Deterministic given
/// config.seed. `surrogate` is required for Prior-RGF only.
inline AttackOutcome run_attack(const TranslationOracle& oracle, const Vec& x0, const AttackConfig& config,
                                const SurrogateModel* surrogate = nullptr, const AttackObserver* observer = nullptr) {
  config.validate();
  const VariantFlags flags = variant_wiring(config.variant);
  (void)PixelVector::image(x0);
  if (x0.size() != oracle.dim()) throw Error("input dimension does not match oracle");
  if (flags.prior == PriorSource::transfer && surrogate == nullptr)
    throw Error("Prior-RGF needs a surrogate model");

  const BoxLimit limit = BoxLimit::around(x0, config.epsilon);
  const auto n = static_cast<std::int64_t>(x0.size());
  RandomSource rng(config.seed);
  AttackState state{x0, 0, QueryCounter(config.budget), -std::numeric_limits<double>::infinity(), Vec()};
  AttackOutcome outcome;
  AttackResult& res = outcome.result;
  Vec y0;

  // Nullify: anchor x0, loss +|T - x0|^2. Distort: anchor y0, loss -|T - y0|^2.
  const double sign = config.loss == LossKind::nullify ? 1.0 : -1.0;
  Vec anchor;
  auto loss_from_output = [&](const Vec& out) { return sign * (out - anchor).squaredNorm(); };
  auto score_of = [&](const Vec& out) {
    return config.loss == LossKind::nullify ? nullifying_score(out, x0, y0) : distortion_score(out, x0, y0);
  };
  auto black_box_loss = [&](const Vec& p) { return loss_from_output(translate(oracle, p, state.counter)); };

  StepRecord pending;
  bool pending_open = false;
  double alpha = 0.0;
  double lambda = 0.0;
  bool lambda_ready = false;
  double prior_sign = 1.0;

  auto finish = [&](bool success, std::string reason) {
    if (pending_open) {
      pending.queries_total = state.counter.total();
      outcome.trace.push_back(pending);
      pending_open = false;
    }
    res.success = success;
    res.stop_reason = std::move(reason);
    res.queries = state.counter.total();
    res.iterations = state.iteration;
    res.x_adv = state.x_star;
    res.output = state.cached_output;
    res.best_score = state.best_score;
    res.y0 = y0;
  };

  try {
    y0 = translate(oracle, x0, state.counter);
    state.cached_output = y0;
    anchor = config.loss == LossKind::nullify ? x0 : y0;
    if ((y0 - x0).norm() < 1e-12) {
      if (config.loss == LossKind::distort) throw Error("threat model is identity on this input");
      // Already nullified: nothing to estimate.
      res.final_score = 100.0;
      state.best_score = 100.0;
      pending = {0, 0, 0.0, 100.0, 0.0, 0.0, 0, 0.0};
      pending_open = true;
      finish(true, "input already nullified");
      return outcome;
    }
    if (config.loss == LossKind::distort) {
      // x0 is a stationary point of the distorting loss (zero gradient, zero
      // discrepancy), so start from a seeded random point inside the limit.
      Vec start(x0.size());
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] = x0[i] + config.epsilon * (rng.uniform() - 0.5);
      state.x_star = project(start, limit);
      state.cached_output = translate(oracle, state.x_star, state.counter);
    }
    double current_loss = loss_from_output(state.cached_output);

    for (;;) {
      const double score = score_of(state.cached_output);
      res.final_score = score;
      state.best_score = std::max(state.best_score, score);
      pending = {state.iteration, 0, current_loss, score, alpha, lambda, 0, 0.0};
      pending_open = true;
      if (score > config.threshold) {
        finish(true, "threshold reached");
        return outcome;
      }

      const Vec& x = state.x_star;
      Vec b;
      if (flags.ellipsoid) {
        const LimitRanges r = limit_ranges(x, limit);
        b = scale_vector(r.plus, r.minus, config.scale_mode);
      }

      std::optional<Vec> v_hat;
      if (flags.prior == PriorSource::self_guiding) {
        const PriorVector p = self_guiding_prior(oracle, x, anchor, state.cached_output, config.delta, state.counter, sign);
        if (p.source != PriorSource::none) v_hat = projected_prior_direction(p.v, x, flags.ellipsoid ? &limit : nullptr);
      } else if (flags.prior == PriorSource::transfer) {
        const PriorVector p = transfer_prior(*surrogate, x, anchor, config.delta, sign);
        v_hat = projected_prior_direction(p.v, x, nullptr);
      }

      if (v_hat && (!lambda_ready || state.iteration % config.R == 0)) {
        const AlphaEstimate a = estimate_alpha(black_box_loss, x, *v_hat, config.delta, config.S, rng);
        prior_sign = a.alpha < 0.0 ? -1.0 : 1.0;
        alpha = std::abs(a.alpha);
        lambda = optimal_lambda(alpha, n, static_cast<std::int64_t>(config.q)).lambda;
        lambda_ready = true;
        pending.alpha = alpha;
        pending.lambda = lambda;
      }

      auto draw_directions = [&]() {
        const bool any_free = flags.ellipsoid && (b.array() > 0.0).any();
        if (v_hat) {
          const Vec oriented = prior_sign * *v_hat;
          return prior_guided_samples(oriented, lambda, any_free ? b : Vec(), config.q, rng);
        }
        if (flags.ellipsoid) {
          if (!any_free) throw Error("no feasible query direction");
          return sample_hyperellipsoid(b, config.q, rng);
        }
        return sample_unit_sphere(x.size(), config.q, rng);
      };

      GradientEstimate est;
      for (std::uint64_t attempt = 0;; ++attempt) {
        est = estimate_from_directions(black_box_loss, x, config.delta, draw_directions(),
                                       std::string(to_string(config.variant)));
        if (est.vector.norm() > 1e-12) break;
        if (attempt >= config.stall_retries) {
          finish(false, "stalled: vanishing gradient estimate");
          return outcome;
        }
      }

      Vec next = pgd_step(x, est, config.eta, limit);
      if (flags.slide) {
        const std::uint64_t before = state.counter.total();
        SlideResult s = gradient_slide(x, next, config.eta, limit, config.max_slide_steps,
                                       observer ? observer->on_slide_point : std::function<void(const Vec&)>{});
        if (observer && observer->on_slide_queries) observer->on_slide_queries(before, state.counter.total());
        pending.slide_steps_taken = s.steps;
        pending.slide_length_recovered = s.recovered;
        next = std::move(s.final);
      }
      if (limit.violation(next) > kFeasibilityTol) throw Error("iterate escaped limit");

      pending.queries_total = state.counter.total();
      outcome.trace.push_back(pending);
      pending_open = false;

      state.x_star = std::move(next);
      ++state.iteration;
      if (observer && observer->on_iterate) observer->on_iterate(state.x_star);

      Vec out = translate(oracle, state.x_star, state.counter);
      current_loss = loss_from_output(out);
      state.cached_output = std::move(out);
    }
  } catch (const BudgetExhausted&) {
    finish(false, "budget exhausted");
  }
  return outcome;
}

/// Tab-separated trace rows with a header line; values printed with 17
/// significant digits so identical runs give identical bytes.
inline void write_trace(std::ostream& os, const std::vector<StepRecord>& trace) {
  os << "iteration\tqueries\tloss\tscore\talpha\tlambda\tslide_steps\tslide_recovered\n";
  char buf[512];
  for (const StepRecord& r : trace) {
    std::snprintf(buf, sizeof buf, "%llu\t%llu\t%.17g\t%.17g\t%.17g\t%.17g\t%llu\t%.17g\n",
                  static_cast<unsigned long long>(r.iteration), static_cast<unsigned long long>(r.queries_total),
                  r.loss_value, r.score, r.alpha, r.lambda, static_cast<unsigned long long>(r.slide_steps_taken),
                  r.slide_length_recovered);
    os << buf;
  }
}

} // namespace zoa
