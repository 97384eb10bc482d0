#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace zoa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Absolute tolerance for every "within limit" check.
inline constexpr double kFeasibilityTol = 1e-12;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by a QueryCounter when the next evaluation would exceed the budget.
class BudgetExhausted : public Error {
public:
  explicit BudgetExhausted(std::uint64_t budget)
      : Error("budget exhausted"), budget_(budget) {}
  std::uint64_t budget() const noexcept { return budget_; }

private:
  std::uint64_t budget_;
};

/// Image geometry for a flat row-major, channel-last vector.
struct ImageShape {
  Eigen::Index height = 1;
  Eigen::Index width = 1;
  Eigen::Index channels = 1;

  Eigen::Index size() const noexcept { return height * width * channels; }
  Eigen::Index index(Eigen::Index row, Eigen::Index col, Eigen::Index ch) const noexcept {
    return (row * width + col) * channels + ch;
  }
  bool operator==(const ImageShape&) const = default;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_finite(const Vec& v) {
  if (!v.allFinite()) throw Error("non-finite vector");
}

/// A flat image (row-major, channel-last) or a free vector reusing the same
/// storage. Image-role values are checked to lie in [0,1] on construction.
class PixelVector {
public:
  enum class Role { image, free };

  static PixelVector image(Vec values) {
    require_finite(values);
    if (values.size() == 0) throw Error("empty vector");
    if (values.minCoeff() < 0.0 || values.maxCoeff() > 1.0)
      throw Error("image entries must lie in [0,1]");
    return PixelVector(std::move(values), Role::image);
  }

  static PixelVector free(Vec values) {
    require_finite(values);
    if (values.size() == 0) throw Error("empty vector");
    return PixelVector(std::move(values), Role::free);
  }

  const Vec& values() const noexcept { return values_; }
  Role role() const noexcept { return role_; }
  Eigen::Index size() const noexcept { return values_.size(); }

private:
  PixelVector(Vec v, Role r) : values_(std::move(v)), role_(r) {}
  Vec values_;
  Role role_;
};

/// Seeded random stream. Identical seed gives an identical sample sequence
/// on the same build.
class RandomSource {
public:
  static constexpr const char* kAlgorithm = "mt19937_64/normal-libstdc++";

  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::string algorithm() const { return kAlgorithm; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  /// Child stream for an independent sub-task.
  RandomSource fork() { return RandomSource(engine_()); }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline double cosine(const Vec& a, const Vec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

} // namespace zoa
