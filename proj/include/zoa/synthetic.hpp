#pragma once

// Desk-scale differentiable translators standing in for trained image
// translation networks. Three families cover diagonal, near-diagonal and
// banded Jacobians:
//
//   channel-shift        out_i = x_i + k_i * phi(x_i) * (c_i - x_i)
//   diag-smooth          out_i = sigma((1 - coupling) g_i(x_i) + coupling (W x)_i + t_i)
//   local-blur-residual  out   = x + gamma (.) (blur3x3(x) - x)
//
// phi(x) = (1 + smoothstep(x)) / 2, g_i(x) = x + beta_i (smoothstep(x) - x),
// W is nonnegative with zero diagonal and unit row sums, sigma is a logistic
// squashing with fixed steepness. The masked blend out = m (.) f(x) + (1 - m) (.) x
// applies to every family. channel-shift and local-blur-residual are convex
// combinations of inputs in [0,1] and need no squashing.

#include "zoa/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <string>
#include <string_view>

namespace zoa {

inline constexpr double kSquashSteepness = 8.0;

enum class TranslatorKind { channel_shift, diag_smooth, local_blur_residual };

inline std::string_view to_string(TranslatorKind k) {
  switch (k) {
  case TranslatorKind::channel_shift: return "channel-shift";
  case TranslatorKind::diag_smooth: return "diag-smooth";
  case TranslatorKind::local_blur_residual: return "local-blur-residual";
  }
  return "?";
}

inline TranslatorKind parse_translator_kind(std::string_view s) {
  if (s == "channel-shift") return TranslatorKind::channel_shift;
  if (s == "diag-smooth") return TranslatorKind::diag_smooth;
  if (s == "local-blur-residual") return TranslatorKind::local_blur_residual;
  throw Error("unknown translator kind: " + std::string(s));
}

/// Declarative description of a synthetic translator.
struct TranslatorSpec {
  TranslatorKind kind = TranslatorKind::channel_shift;
  ImageShape shape{16, 16, 3};
  std::string mask = "all"; // all | channel:K | random:P
  double target = 0.9;      // channel-shift pull target
  double shift = 0.35;      // channel-shift strength in [0,1]
  double coupling = 0.0;    // diag-smooth off-diagonal mixing in [0,1]
  double blur_gain = 0.5;   // local-blur-residual gain in [0,1]
  double nonlinearity = 0.6; // diag-smooth max |beta|
  std::uint64_t seed = 1;
};

inline double smoothstep(double x) {
  const double t = std::clamp(x, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline double smoothstep_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 6.0 * x * (1.0 - x);
}

inline double squash(double z) { return 1.0 / (1.0 + std::exp(-kSquashSteepness * (z - 0.5))); }

inline Vec build_mask(const ImageShape& shape, std::string_view spec, RandomSource& rng) {
  Vec m = Vec::Zero(shape.size());
  auto parse_number = [&](std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw Error("bad mask spec: " + std::string(spec));
    return v;
  };
  if (spec == "all") {
    m.setOnes();
  } else if (spec.starts_with("channel:")) {
    const double ch = parse_number(spec.substr(8));
    if (ch < 0 || ch >= static_cast<double>(shape.channels) || ch != std::floor(ch))
      throw Error("mask channel out of range: " + std::string(spec));
    for (Eigen::Index r = 0; r < shape.height; ++r)
      for (Eigen::Index c = 0; c < shape.width; ++c) m[shape.index(r, c, static_cast<Eigen::Index>(ch))] = 1.0;
  } else if (spec.starts_with("random:")) {
    const double p = parse_number(spec.substr(7));
    if (!(p >= 0.0 && p <= 1.0)) throw Error("mask fraction must lie in [0,1]");
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = rng.uniform() < p ? 1.0 : 0.0;
  } else {
    throw Error("bad mask spec: " + std::string(spec));
  }
  return m;
}

class SyntheticTranslator final : public TranslationOracle {
public:
  TranslatorKind kind() const noexcept { return kind_; }
  const ImageShape& shape() const noexcept { return shape_; }
  const Vec& mask() const noexcept { return mask_; }
  double coupling() const noexcept { return coupling_; }

  Eigen::Index dim() const override { return shape_.size(); }

  Vec evaluate(const Vec& x) const override {
    if (x.size() != dim()) throw Error("input dimension does not match translator");
    Vec f(x.size());
    switch (kind_) {
    case TranslatorKind::channel_shift:
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double w = strength_[i] * 0.5 * (1.0 + smoothstep(x[i]));
        f[i] = x[i] + w * (target_[i] - x[i]);
      }
      break;
    case TranslatorKind::diag_smooth: {
      Vec z = Vec::Zero(x.size());
      if (coupling_ > 0.0) z = coupling_ * (mixing_ * x);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double g = x[i] + beta_[i] * (smoothstep(x[i]) - x[i]);
        f[i] = squash((1.0 - coupling_) * g + z[i] + bias_[i]);
      }
      break;
    }
    case TranslatorKind::local_blur_residual: {
      const Vec b = blur(x);
      f = x + gain_.cwiseProduct(b - x);
      break;
    }
    }
    return mask_.cwiseProduct(f) + (Vec::Ones(x.size()) - mask_).cwiseProduct(x);
  }

  /// Separable [1 2 1]/4 blur per channel; edge taps are renormalized.
  Vec blur(const Vec& x) const {
    const ImageShape& s = shape_;
    Vec tmp(x.size());
    Vec out(x.size());
    for (Eigen::Index r = 0; r < s.height; ++r)
      for (Eigen::Index c = 0; c < s.width; ++c)
        for (Eigen::Index ch = 0; ch < s.channels; ++ch) {
          double acc = 2.0 * x[s.index(r, c, ch)];
          double wsum = 2.0;
          if (c > 0) { acc += x[s.index(r, c - 1, ch)]; wsum += 1.0; }
          if (c + 1 < s.width) { acc += x[s.index(r, c + 1, ch)]; wsum += 1.0; }
          tmp[s.index(r, c, ch)] = acc / wsum;
        }
    for (Eigen::Index r = 0; r < s.height; ++r)
      for (Eigen::Index c = 0; c < s.width; ++c)
        for (Eigen::Index ch = 0; ch < s.channels; ++ch) {
          double acc = 2.0 * tmp[s.index(r, c, ch)];
          double wsum = 2.0;
          if (r > 0) { acc += tmp[s.index(r - 1, c, ch)]; wsum += 1.0; }
          if (r + 1 < s.height) { acc += tmp[s.index(r + 1, c, ch)]; wsum += 1.0; }
          out[s.index(r, c, ch)] = acc / wsum;
        }
    return out;
  }

  /// Copy with every parameter jittered by multiplicative Gaussian noise.
  SyntheticTranslator perturbed(double scale, RandomSource& rng) const {
    SyntheticTranslator t = *this;
    auto jitter = [&](Vec& v, double lo, double hi) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i] * (1.0 + scale * rng.normal()), lo, hi);
    };
    switch (kind_) {
    case TranslatorKind::channel_shift:
      jitter(t.strength_, 0.0, 1.0);
      jitter(t.target_, 0.0, 1.0);
      break;
    case TranslatorKind::diag_smooth:
      jitter(t.beta_, -0.95, 0.95);
      jitter(t.bias_, -1.0, 1.0);
      for (Eigen::Index r = 0; r < t.mixing_.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < t.mixing_.cols(); ++c) {
          if (r == c) continue;
          t.mixing_(r, c) = std::max(0.0, t.mixing_(r, c) * (1.0 + scale * rng.normal()));
          sum += t.mixing_(r, c);
        }
        if (sum > 0.0) t.mixing_.row(r) /= sum;
      }
      break;
    case TranslatorKind::local_blur_residual:
      jitter(t.gain_, 0.0, 1.0);
      break;
    }
    return t;
  }

  friend SyntheticTranslator build_synthetic(const TranslatorSpec& spec);

private:
  SyntheticTranslator() = default;

  TranslatorKind kind_ = TranslatorKind::channel_shift;
  ImageShape shape_;
  Vec mask_;
  double coupling_ = 0.0;
  Vec strength_, target_;   // channel-shift
  Vec beta_, bias_;         // diag-smooth
  Mat mixing_;              // diag-smooth, zero diagonal
  Vec gain_;                // local-blur-residual
};

/// Deterministic constructor: identical spec gives an identical translator.
inline SyntheticTranslator build_synthetic(const TranslatorSpec& spec) {
  const Eigen::Index n = spec.shape.size();
  if (spec.shape.height < 1 || spec.shape.width < 1 || spec.shape.channels < 1)
    throw Error("translator dimensions must be positive");
  RandomSource rng(spec.seed);
  SyntheticTranslator t;
  t.kind_ = spec.kind;
  t.shape_ = spec.shape;
  t.mask_ = build_mask(spec.shape, spec.mask, rng);

  switch (spec.kind) {
  case TranslatorKind::channel_shift:
    if (!(spec.shift >= 0.0 && spec.shift <= 1.0)) throw Error("shift must lie in [0,1]");
    if (!(spec.target >= 0.0 && spec.target <= 1.0)) throw Error("target must lie in [0,1]");
    t.strength_ = Vec::Constant(n, spec.shift);
    t.target_ = Vec::Constant(n, spec.target);
    break;
  case TranslatorKind::diag_smooth:
    if (!(spec.coupling >= 0.0 && spec.coupling <= 1.0)) throw Error("coupling must lie in [0,1]");
    t.coupling_ = spec.coupling;
    t.beta_.resize(n);
    t.bias_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      t.beta_[i] = spec.nonlinearity * (2.0 * rng.uniform() - 1.0);
      t.bias_[i] = 0.1 * (2.0 * rng.uniform() - 1.0);
    }
    t.mixing_ = Mat::Zero(n, n);
    if (n > 1) {
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c)
          if (r != c) t.mixing_(r, c) = rng.uniform();
        t.mixing_.row(r) /= t.mixing_.row(r).sum();
      }
    }
    break;
  case TranslatorKind::local_blur_residual:
    if (!(spec.blur_gain >= 0.0 && spec.blur_gain <= 1.0)) throw Error("blur gain must lie in [0,1]");
    t.gain_ = Vec::Constant(n, spec.blur_gain);
    break;
  }
  return t;
}

/// Same architecture as a threat model, parameters jittered by seeded noise.
struct SurrogateModel {
  SyntheticTranslator model;
  double scale;
  std::uint64_t seed;
};

inline SurrogateModel make_surrogate(const SyntheticTranslator& base, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0)) throw Error("surrogate perturbation scale must be nonnegative");
  RandomSource rng(seed);
  return {base.perturbed(scale, rng), scale, seed};
}

} // namespace zoa
