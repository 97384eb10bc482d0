#pragma once

// Randomized verification suites: projection properties, sliding
// feasibility, prior quality, lambda optimality, estimator consistency and
// Jacobian diagonality. Each suite is deterministic given its seed and
// reports violation counts together with the seeds that produced them.

#include "zoa/attack.hpp"
#include "zoa/suite.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace zoa {

struct ProbeCheck {
  explicit ProbeCheck(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst = 0.0; // largest observed value of the checked quantity
  std::vector<std::uint64_t> violating_seeds; // first few only
  std::string detail;

  bool passed() const { return trials > 0 && violations == 0; }

  void record(bool ok, std::uint64_t seed) {
    ++trials;
    if (!ok) {
      ++violations;
      if (violating_seeds.size() < 10) violating_seeds.push_back(seed);
    }
  }
};

struct ProbeReport {
  std::vector<ProbeCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ProbeCheck& c) { return c.passed(); });
  }

  const ProbeCheck& find(std::string_view prefix) const {
    for (const ProbeCheck& c : checks)
      if (std::string_view(c.name).starts_with(prefix)) return c;
    throw Error("no probe check named " + std::string(prefix));
  }

  void append(const ProbeReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }
};

inline void write_report(std::ostream& os, const ProbeReport& report) {
  for (const ProbeCheck& c : report.checks) {
    os << (c.passed() ? "PASS " : "FAIL ") << c.name << "  trials=" << c.trials << " violations=" << c.violations;
    if (!c.detail.empty()) os << "  " << c.detail;
    if (!c.violating_seeds.empty()) {
      os << "  seeds=";
      for (std::size_t k = 0; k < c.violating_seeds.size(); ++k) os << (k ? "," : "") << c.violating_seeds[k];
    }
    os << '\n';
  }
}

struct ProbeOptions {
  /// Mutation hook: replace the projection with the identity in the sliding
  /// probe. A correct verifier must then report feasibility violations.
  bool disable_projection = false;
};

namespace detail {

struct RandomBox {
  Vec x0;
  BoxLimit limit;
  Vec x; // a feasible iterate
};

inline RandomBox random_box(Eigen::Index n, RandomSource& rng) {
  Vec x0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    x0[i] = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : rng.uniform()); // some saturated pixels
  }
  const double eps = 0.02 + 0.28 * rng.uniform();
  BoxLimit limit = BoxLimit::around(x0, eps);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    // Put some coordinates exactly on a face.
    if (u < 0.15) x[i] = limit.lo()[i];
    else if (u < 0.3) x[i] = limit.hi()[i];
    else x[i] = limit.lo()[i] + rng.uniform() * (limit.hi()[i] - limit.lo()[i]);
  }
  return {std::move(x0), std::move(limit), std::move(x)};
}

inline SyntheticTranslator random_translator(Eigen::Index n, RandomSource& rng) {
  TranslatorSpec spec;
  spec.kind = TranslatorKind::diag_smooth;
  spec.shape = {1, n, 1};
  spec.coupling = 0.5 * rng.uniform();
  spec.seed = rng.next_u64();
  return build_synthetic(spec);
}

} // namespace detail

/// Projection and sliding properties over randomized boxes, losses and steps.
///  (a)  g . (Pi(ghat) - ghat) <= 1e-9, g finite-difference gradient, ghat RGF estimate
///  (a') same with ghat replaced by the exact gradient direction
///  (a'') ghat . (Pi(ghat) - ghat) <= 1e-12
///  (b)  |Pi(ghat)| <= |ghat| + 1e-12
///  (c)  every sliding point lies in the limit (tolerance 1e-12)
///  (d)  with scale_mode=min, antithetic probes x +- delta xi (delta <= 1) and
///       the raw limit-aware estimate taken as a step stay in the limit
/// Pi clips the descent displacement -v taken from the iterate.
inline ProbeReport projection_probes(std::uint64_t seed, std::size_t trials, const ProbeOptions& opts = {}) {
  ProbeCheck a{"(a) g.(Pi(ghat)-ghat) <= 1e-9 [RGF estimate]"};
  ProbeCheck a_exact{"(a') g.(Pi(g)-g) <= 1e-9 [exact gradient]"};
  ProbeCheck a_self{"(a'') ghat.(Pi(ghat)-ghat) <= 1e-12"};
  ProbeCheck b{"(b) |Pi(ghat)| <= |ghat| + 1e-12"};
  ProbeCheck c{"(c) sliding points within limit"};
  ProbeCheck d_probe{"(d) limit-aware antithetic probes within limit"};
  ProbeCheck d_est{"(d') raw limit-aware estimate within limit"};

  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = mix_seed(seed, t);
    RandomSource rng(s);
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 47.0); // 2..48
    detail::RandomBox box = detail::random_box(n, rng);
    const SyntheticTranslator T = detail::random_translator(n, rng);
    auto loss = [&](const Vec& p) { return (T.evaluate(p) - box.x0).squaredNorm(); };

    const Vec g = finite_difference_gradient(loss, box.x, 1e-6);
    const std::size_t q = 1 + static_cast<std::size_t>(rng.uniform() * 32.0);
    Vec ghat = rgf_estimate(loss, box.x, 1e-3, q, rng).vector;
    const double length = 0.01 + 0.99 * rng.uniform();
    if (ghat.norm() > 0.0) ghat *= length / ghat.norm();
    // Descent convention: the step taken is -ghat, so Pi(ghat) = -(P(x - ghat) - x).
    auto proj = [&](const Vec& v) { return Vec(-project_step(box.x, Vec(-v), box.limit)); };
    const Vec pg = proj(ghat);

    const double va = g.dot(pg - ghat);
    a.worst = std::max(a.worst, va);
    a.record(va <= 1e-9, s);

    if (g.norm() > 0.0) {
      const Vec ge = g * (length / g.norm());
      const double ve = g.dot(proj(ge) - ge);
      a_exact.worst = std::max(a_exact.worst, ve);
      a_exact.record(ve <= 1e-9, s);
    }
    const double vs = ghat.dot(pg - ghat);
    a_self.worst = std::max(a_self.worst, vs);
    a_self.record(vs <= 1e-12, s);

    const double vb = pg.norm() - ghat.norm();
    b.worst = std::max(b.worst, vb);
    b.record(vb <= 1e-12, s);

    // Sliding episode: half the trials in 2-D, half at the drawn dimension.
    {
      const Eigen::Index m = t % 2 == 0 ? 2 : n;
      detail::RandomBox sb = m == n ? box : detail::random_box(m, rng);
      Vec dir = sample_unit_sphere(m, 1, rng).front();
      const double l = 0.01 + 0.99 * rng.uniform();
      auto projector = [&](const Vec& v) { return opts.disable_projection ? v : project(v, sb.limit); };
      const Vec s2 = projector(Vec(sb.x + l * dir));
      bool ok = sb.limit.violation(s2) <= kFeasibilityTol;
      double worst = sb.limit.violation(s2);
      gradient_slide_with(sb.x, s2, l, projector, 20, [&](const Vec& p) {
        const double v = sb.limit.violation(p);
        worst = std::max(worst, v);
        ok = ok && v <= kFeasibilityTol;
      });
      c.worst = std::max(c.worst, worst);
      c.record(ok, s);
    }

    // Containment of limit-aware queries and of the raw estimate.
    {
      const LimitRanges r = limit_ranges(box.x, box.limit);
      const Vec bvec = scale_vector(r.plus, r.minus, ScaleMode::min);
      if ((bvec.array() > 0.0).any()) {
        const double delta = rng.uniform();
        bool ok = true;
        double worst = 0.0;
        for (const Vec& xi : sample_hyperellipsoid(bvec, q, rng)) {
          for (double sgn : {1.0, -1.0}) {
            const double v = box.limit.violation(Vec(box.x + sgn * delta * xi));
            worst = std::max(worst, v);
            ok = ok && v <= kFeasibilityTol;
          }
        }
        d_probe.worst = std::max(d_probe.worst, worst);
        d_probe.record(ok, s);
        const Vec raw = limit_aware_rgf(loss, box.x, box.limit, 1e-3, q, ScaleMode::min, rng).vector;
        const double v = box.limit.violation(Vec(box.x + raw));
        d_est.worst = std::max(d_est.worst, v);
        d_est.record(v <= kFeasibilityTol, s);
      }
    }
  }
  ProbeReport report;
  for (ProbeCheck* pc : {&a, &a_exact, &a_self, &b, &c, &d_probe, &d_est}) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "worst=%.3g", pc->worst);
    pc->detail = buf;
    report.checks.push_back(std::move(*pc));
  }
  return report;
}

struct MeanStat {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanStat mean_stat(const std::vector<double>& v) {
  MeanStat m;
  m.n = v.size();
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return m;
}

struct PriorQualityReport {
  MeanStat self_guiding;
  MeanStat transfer;
  MeanStat random;
  MeanStat self_minus_transfer; // paired differences
  MeanStat self_minus_random;
};

struct PriorQualitySetup {
  TranslatorSpec oracle{TranslatorKind::diag_smooth, {4, 4, 3}, "all", 0.9, 0.35, 0.1, 0.5, 0.6, 11};
  std::size_t inputs = 50;
  std::size_t trials = 1;          // iterates per input; the first is x0 itself
  double surrogate_scale = 0.3;
  double epsilon = 0.1;
  double delta = 1e-3;
  std::uint64_t seed = 2024;
};

/// Cosine of each prior to the finite-difference nullifying-loss gradient.
inline PriorQualityReport prior_quality_probe(const PriorQualitySetup& setup) {
  const SyntheticTranslator T = build_synthetic(setup.oracle);
  std::vector<double> cs, ct, cr, dst, dsr;
  for (std::size_t i = 0; i < setup.inputs; ++i) {
    const std::uint64_t s = mix_seed(setup.seed, i);
    RandomSource rng(s);
    const Vec x0 = synthetic_image(setup.oracle.shape, s);
    const SurrogateModel sur = make_surrogate(T, setup.surrogate_scale, mix_seed(s, 1));
    const BoxLimit limit = BoxLimit::around(x0, setup.epsilon);
    for (std::size_t k = 0; k < setup.trials; ++k) {
      Vec x = x0;
      if (k > 0)
        for (Eigen::Index j = 0; j < x.size(); ++j)
          x[j] = limit.lo()[j] + rng.uniform() * (limit.hi()[j] - limit.lo()[j]);
      auto loss = [&](const Vec& p) { return (T.evaluate(p) - x0).squaredNorm(); };
      const Vec g = finite_difference_gradient(loss, x, 1e-5);
      QueryCounter scratch;
      const PriorVector self = self_guiding_prior(T, x, x0, T.evaluate(x), setup.delta, scratch);
      const PriorVector transfer = transfer_prior(sur, x, x0, setup.delta);
      const Vec rnd = sample_unit_sphere(x.size(), 1, rng).front();
      const double a_s = cosine(self.v, g), a_t = cosine(transfer.v, g), a_r = cosine(rnd, g);
      cs.push_back(a_s);
      ct.push_back(a_t);
      cr.push_back(a_r);
      dst.push_back(a_s - a_t);
      dsr.push_back(a_s - a_r);
    }
  }
  return {mean_stat(cs), mean_stat(ct), mean_stat(cr), mean_stat(dst), mean_stat(dsr)};
}

/// Expected-error objective whose maximizer over lambda is the optimal bias:
/// NUM / DENOM with
///   m     = lambda a^2 + (1 - lambda)(1 - a^2)/(N - 1)
///   NUM   = m^2
///   DENOM = (1 - 1/q)(lambda^2 a^2 + ((1 - lambda)/(N - 1))^2 (1 - a^2)) + m / q
inline double lambda_objective(double lambda, double alpha, double N, double q) {
  const double a2 = alpha * alpha;
  const double m = lambda * a2 + (1.0 - lambda) / (N - 1.0) * (1.0 - a2);
  const double denom =
      (1.0 - 1.0 / q) * (lambda * lambda * a2 + std::pow((1.0 - lambda) / (N - 1.0), 2) * (1.0 - a2)) + m / q;
  return m * m / denom;
}

/// argmax of lambda_objective over {0, step, 2 step, ..., 1}.
inline double lambda_grid_argmax(double alpha, double N, double q, double step = 0.001) {
  const int count = static_cast<int>(std::lround(1.0 / step));
  double best = 0.0, best_val = -1.0;
  for (int k = 0; k <= count; ++k) {
    const double l = static_cast<double>(k) * step;
    const double v = lambda_objective(l, alpha, N, q);
    if (v > best_val) {
      best_val = v;
      best = l;
    }
  }
  return best;
}

/// Closed-form lambda against the grid search over random (N, q, alpha), plus
/// the two exact boundary branches.
inline ProbeReport lambda_probe(std::uint64_t seed, std::size_t trials) {
  ProbeCheck grid{"lambda closed form vs grid argmax (tol 0.002)"};
  ProbeCheck bounds{"lambda boundary branches exact"};
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = mix_seed(seed, t);
    RandomSource rng(s);
    const auto N = static_cast<std::int64_t>(10 + rng.uniform() * 491.0);
    const auto q = static_cast<std::int64_t>(1 + rng.uniform() * 64.0);
    const double alpha = rng.uniform();
    const double closed = optimal_lambda(alpha, N, q).lambda;
    const double oracle = lambda_grid_argmax(alpha, static_cast<double>(N), static_cast<double>(q));
    grid.worst = std::max(grid.worst, std::abs(closed - oracle));
    grid.record(std::abs(closed - oracle) <= 0.002, s);

    const double span = static_cast<double>(N + 2 * q - 2);
    // Just inside each constant branch, plus the endpoints alpha = 0 and 1.
    const double lo = optimal_lambda(std::sqrt(0.999 / span), N, q).lambda;
    const double hi = optimal_lambda(std::min(1.0, std::sqrt(1.001 * (2.0 * static_cast<double>(q) - 1.0) / span)), N, q).lambda;
    const double oracle_lo = lambda_grid_argmax(std::sqrt(0.999 / span), static_cast<double>(N), static_cast<double>(q));
    bounds.record(lo == 0.0 && hi == 1.0 && oracle_lo == 0.0 && optimal_lambda(0.0, N, q).lambda == 0.0 &&
                      optimal_lambda(1.0, N, q).lambda == 1.0,
                  s);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "worst=%.4g", grid.worst);
  grid.detail = buf;
  return {{grid, bounds}};
}

struct ConsistencyReport {
  std::vector<std::size_t> qs;
  std::vector<MeanStat> cosines;
};

/// Mean cosine between RGF estimates and the exact gradient of a linear loss.
inline ConsistencyReport estimator_consistency(std::uint64_t seed, std::size_t seeds, Eigen::Index n = 16,
                                               std::vector<std::size_t> qs = {4, 16, 64, 256}) {
  ConsistencyReport rep;
  rep.qs = qs;
  for (std::size_t q : qs) {
    std::vector<double> cos;
    for (std::size_t k = 0; k < seeds; ++k) {
      RandomSource rng(mix_seed(seed, k));
      Vec c(n);
      for (Eigen::Index i = 0; i < n; ++i) c[i] = rng.normal();
      Vec x(n);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform();
      auto loss = [&](const Vec& p) { return c.dot(p); };
      RandomSource est_rng(mix_seed(mix_seed(seed, k), q));
      cos.push_back(cosine(rgf_estimate(loss, x, 1e-3, q, est_rng).vector, c));
    }
    rep.cosines.push_back(mean_stat(cos));
  }
  return rep;
}

struct DiagonalityRow {
  std::uint64_t seed;
  std::vector<double> metric; // per coupling
};

/// Diagonality of the finite-difference Jacobian of diag-smooth translators.
inline std::vector<DiagonalityRow> diagonality_probe(std::uint64_t seed, std::size_t seeds,
                                                     const std::vector<double>& couplings = {0.0, 0.1, 0.5},
                                                     ImageShape shape = {4, 4, 3}) {
  std::vector<DiagonalityRow> rows;
  for (std::size_t k = 0; k < seeds; ++k) {
    DiagonalityRow row{mix_seed(seed, k), {}};
    const Vec x = synthetic_image(shape, row.seed);
    for (double c : couplings) {
      TranslatorSpec spec;
      spec.kind = TranslatorKind::diag_smooth;
      spec.shape = shape;
      spec.coupling = c;
      spec.seed = row.seed;
      row.metric.push_back(diagonality_metric(finite_difference_jacobian(build_synthetic(spec), x, 1e-6)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct VerifyLevel {
  std::size_t projection_trials;
  std::size_t lambda_trials;
  std::size_t consistency_seeds;
  std::size_t prior_inputs;
  std::size_t diagonality_seeds;

  static VerifyLevel fast() { return {1000, 200, 30, 50, 3}; }
  static VerifyLevel full() { return {10000, 200, 100, 50, 10}; }
};

inline ProbeCheck single_check(std::string name, bool ok, std::string detail) {
  ProbeCheck c{std::move(name)};
  c.record(ok, 0);
  c.violating_seeds.clear();
  c.detail = std::move(detail);
  return c;
}

/// Every verification suite at the given trial counts.
inline ProbeReport run_verification(const VerifyLevel& level, const ProbeOptions& opts = {}, std::uint64_t seed = 7) {
  ProbeReport report = projection_probes(seed, level.projection_trials, opts);
  report.append(lambda_probe(mix_seed(seed, 1), level.lambda_trials));

  const ConsistencyReport cons = estimator_consistency(mix_seed(seed, 2), level.consistency_seeds);
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean cos at q=%zu: %.4f", cons.qs.back(), cons.cosines.back().mean);
    report.checks.push_back(single_check("estimator consistency mean cosine >= 0.9", cons.cosines.back().mean >= 0.9, buf));
    bool mono = true;
    std::string d = "means";
    for (std::size_t k = 0; k < cons.qs.size(); ++k) {
      std::snprintf(buf, sizeof buf, " q%zu=%.4f", cons.qs[k], cons.cosines[k].mean);
      d += buf;
      if (k > 0 && cons.cosines[k].mean < cons.cosines[k - 1].mean - cons.cosines[k].se) mono = false;
    }
    report.checks.push_back(single_check("estimator consistency monotone in q", mono, d));
  }

  PriorQualitySetup pq;
  pq.inputs = level.prior_inputs;
  pq.seed = mix_seed(seed, 3);
  const PriorQualityReport prior = prior_quality_probe(pq);
  {
    char buf[200];
    std::snprintf(buf, sizeof buf, "self=%.4f transfer=%.4f random=%.4f diff=%.4f+-%.4f", prior.self_guiding.mean,
                  prior.transfer.mean, prior.random.mean, prior.self_minus_transfer.mean, prior.self_minus_transfer.se);
    report.checks.push_back(single_check("self-guiding prior beats transfer prior (95%)",
                                         prior.self_minus_transfer.mean > 1.96 * prior.self_minus_transfer.se, buf));
    report.checks.push_back(single_check("self-guiding prior beats random prior (95%)",
                                         prior.self_minus_random.mean > 1.96 * prior.self_minus_random.se, buf));
  }

  ProbeCheck diag{"Jacobian diagonality >= 0.999 at coupling 0, decreasing in coupling"};
  for (const DiagonalityRow& row : diagonality_probe(mix_seed(seed, 4), level.diagonality_seeds)) {
    const auto& m = row.metric;
    diag.worst = std::max(diag.worst, 1.0 - m[0]);
    diag.record(m[0] >= 0.999 && m[0] > m[1] && m[1] > m[2], row.seed);
  }
  report.checks.push_back(std::move(diag));
  return report;
}

} // namespace zoa
