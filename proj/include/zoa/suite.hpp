#pragma once

// Experiment runner over (input x variant x replication) and summary tables.

#include "zoa/attack.hpp"
#include "zoa/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace zoa {

/// Smooth seeded test image: a few low-frequency cosine waves around mid-gray,
/// clamped to [0,1] so some pixels saturate at the prefix limit.
inline Vec synthetic_image(const ImageShape& shape, std::uint64_t seed) {
  RandomSource rng(seed);
  constexpr int kWaves = 4;
  std::array<double, kWaves> amp{}, fr{}, fc{}, phase{};
  for (int k = 0; k < kWaves; ++k) {
    amp[k] = rng.uniform();
    fr[k] = 0.6 * rng.uniform();
    fc[k] = 0.6 * rng.uniform();
    phase[k] = 6.283185307179586 * rng.uniform();
  }
  Vec x(shape.size());
  for (Eigen::Index r = 0; r < shape.height; ++r)
    for (Eigen::Index c = 0; c < shape.width; ++c)
      for (Eigen::Index ch = 0; ch < shape.channels; ++ch) {
        double v = 0.5;
        for (int k = 0; k < kWaves; ++k)
          v += 0.25 * amp[k] * std::cos(fr[k] * static_cast<double>(r) + fc[k] * static_cast<double>(c) + phase[k] +
                                        static_cast<double>(ch));
        x[shape.index(r, c, ch)] = std::clamp(v, 0.0, 1.0);
      }
  return x;
}

/// splitmix64 finalizer, used to derive per-run seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ExperimentSuite {
  TranslatorSpec oracle;
  std::vector<Vec> inputs;
  std::vector<Variant> variants;
  AttackConfig base;
  std::size_t replications = 1;
  unsigned parallel = 1;
};

struct RunSpec {
  std::size_t run_id = 0;
  std::size_t input_index = 0;
  Variant variant = Variant::RGF;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
};

struct RunRecord {
  RunSpec spec;
  AttackOutcome outcome;
  std::string error; // non-empty when the run raised
};

struct SummaryRow {
  std::string variant;
  double asr = 0.0;            // percent
  double q_mean = 0.0;         // failures counted at full budget
  double q_median = 0.0;
  double q_success_mean = 0.0; // successes only; NaN when none
  double score_mean = 0.0;
  std::size_t runs = 0;
  std::size_t successes = 0;
};

/// Minimal per-run result consumed by aggregate().
struct RunSummary {
  std::string variant;
  bool success = false;
  std::uint64_t queries = 0;
  std::uint64_t budget = 0;
  double final_score = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// One row per variant, sorted by variant name. Failed runs contribute the
/// full budget to Q. Independent of run order.
inline std::vector<SummaryRow> aggregate(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw Error("cannot aggregate an empty suite");
  std::map<std::string, std::vector<const RunSummary*>> by_variant;
  for (const RunSummary& r : runs) by_variant[r.variant].push_back(&r);
  std::vector<SummaryRow> rows;
  for (auto& [name, group] : by_variant) {
    SummaryRow row;
    row.variant = name;
    row.runs = group.size();
    std::vector<double> q;
    std::vector<double> q_ok;
    double score_sum = 0.0;
    for (const RunSummary* r : group) {
      const double attempted = r->success ? static_cast<double>(r->queries) : static_cast<double>(r->budget);
      q.push_back(attempted);
      if (r->success) {
        ++row.successes;
        q_ok.push_back(static_cast<double>(r->queries));
      }
      score_sum += r->final_score;
    }
    // Sorted sums keep the result independent of input order.
    std::sort(q.begin(), q.end());
    std::sort(q_ok.begin(), q_ok.end());
    row.asr = 100.0 * static_cast<double>(row.successes) / static_cast<double>(row.runs);
    row.q_mean = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
    row.q_median = median(q);
    row.q_success_mean = q_ok.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::accumulate(q_ok.begin(), q_ok.end(), 0.0) / static_cast<double>(q_ok.size());
    std::vector<double> scores;
    for (const RunSummary* r : group) scores.push_back(r->final_score);
    std::sort(scores.begin(), scores.end());
    row.score_mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    rows.push_back(row);
  }
  return rows;
}

struct SuiteResult {
  std::vector<SummaryRow> rows;
  std::vector<RunRecord> runs; // indexed by run_id
};

/// Enumerates runs input-major, then replication, then variant. Variants of the
/// same (input, replication) share a seed so comparisons are paired.
inline std::vector<RunSpec> plan_runs(const ExperimentSuite& suite) {
  std::vector<RunSpec> plan;
  for (std::size_t i = 0; i < suite.inputs.size(); ++i)
    for (std::size_t r = 0; r < suite.replications; ++r)
      for (Variant v : suite.variants)
        plan.push_back({plan.size(), i, v, r, mix_seed(mix_seed(suite.base.seed, i), r)});
  return plan;
}

using ObserverFactory = std::function<AttackObserver(const RunSpec&)>;

/// Executes every run, optionally on several threads. Results are placed by
/// run id, so the output does not depend on completion order.
inline SuiteResult run_suite(const ExperimentSuite& suite, const ObserverFactory& make_observer = {}) {
  if (suite.inputs.empty() || suite.variants.empty() || suite.replications == 0)
    throw Error("suite must have inputs, variants and replications");
  suite.base.validate();
  const SyntheticTranslator oracle = build_synthetic(suite.oracle);
  for (const Vec& x : suite.inputs)
    if (x.size() != oracle.dim()) throw Error("suite input dimension does not match oracle");
  const SurrogateModel surrogate = make_surrogate(oracle, suite.base.surrogate_scale, mix_seed(suite.oracle.seed, 17));

  const std::vector<RunSpec> plan = plan_runs(suite);
  SuiteResult result;
  result.runs.resize(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < plan.size(); k = next++) {
      const RunSpec& spec = plan[k];
      RunRecord rec;
      rec.spec = spec;
      AttackConfig cfg = suite.base;
      cfg.variant = spec.variant;
      cfg.seed = spec.seed;
      try {
        AttackObserver obs;
        if (make_observer) obs = make_observer(spec);
        rec.outcome = run_attack(oracle, suite.inputs[spec.input_index], cfg, &surrogate, make_observer ? &obs : nullptr);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      result.runs[k] = std::move(rec);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(suite.parallel, static_cast<unsigned>(plan.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<RunSummary> summaries;
  for (const RunRecord& r : result.runs) {
    const auto& res = r.outcome.result;
    summaries.push_back({std::string(to_string(r.spec.variant)), r.error.empty() && res.success,
                         r.error.empty() ? res.queries : suite.base.budget, suite.base.budget,
                         r.error.empty() ? res.final_score : 0.0});
  }
  result.rows = aggregate(summaries);
  return result;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows, char sep = '\t') {
  os << "variant" << sep << "runs" << sep << "ASR" << sep << "Q_mean" << sep << "Q_median" << sep << "Q_success_mean"
     << sep << "score_mean\n";
  char buf[256];
  for (const SummaryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s%c%zu%c%.2f%c%.1f%c%.1f%c%.1f%c%.4f\n", r.variant.c_str(), sep, r.runs, sep, r.asr,
                  sep, r.q_mean, sep, r.q_median, sep, r.q_success_mean, sep, r.score_mean);
    os << buf;
  }
}

} // namespace zoa
