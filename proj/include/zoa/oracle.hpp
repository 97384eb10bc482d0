#pragma once

#include "zoa/core.hpp"

#include <cstdint>
#include <limits>

namespace zoa {

/// Black-box translation function. Implementations are deterministic,
/// immutable after construction and map [0,1]^N into [0,1]^N.
class TranslationOracle {
public:
  virtual ~TranslationOracle() = default;
  virtual Eigen::Index dim() const = 0;
  /// Uncounted evaluation. Attack code must go through translate(oracle, x, counter).
  virtual Vec evaluate(const Vec& x) const = 0;
};

/// Oracle evaluations spent by one attack run.
class QueryCounter {
public:
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

  explicit QueryCounter(std::uint64_t budget = kUnlimited) : budget_(budget) {
    if (budget == 0) throw Error("query budget must be positive");
  }

  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t budget() const noexcept { return budget_; }
  std::uint64_t remaining() const noexcept { return budget_ - total_; }

  /// Accounts one evaluation, or throws if none is left.
  void charge() {
    if (total_ >= budget_) throw BudgetExhausted(budget_);
    ++total_;
  }

private:
  std::uint64_t total_ = 0;
  std::uint64_t budget_;
};

inline Vec translate(const TranslationOracle& oracle, const Vec& x, QueryCounter& counter) {
  if (x.size() != oracle.dim()) throw Error("input dimension does not match oracle");
  require_finite(x);
  counter.charge();
  return oracle.evaluate(x);
}

} // namespace zoa
