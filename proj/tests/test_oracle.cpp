#include "zoa/finite_difference.hpp"
#include "zoa/suite.hpp"
#include "zoa/synthetic.hpp"

#include <gtest/gtest.h>

using namespace zoa;

namespace {

TranslatorSpec spec_of(TranslatorKind kind, ImageShape shape, std::uint64_t seed = 1) {
  TranslatorSpec s;
  s.kind = kind;
  s.shape = shape;
  s.seed = seed;
  return s;
}

Vec random_image(Eigen::Index n, RandomSource& rng) {
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform();
  return x;
}

// Fixed diagonal linear map, for checking Jacobian-vector products.
class DiagonalLinear final : public TranslationOracle {
 public:
  explicit DiagonalLinear(Vec d) : d_(std::move(d)) {}
  Eigen::Index dim() const override { return d_.size(); }
  Vec evaluate(const Vec& x) const override { return d_.cwiseProduct(x); }

 private:
  Vec d_;
};

} // namespace

TEST(QueryCounter, ChargesUntilBudget) {
  QueryCounter c(2);
  c.charge();
  c.charge();
  EXPECT_EQ(c.total(), 2u);
  EXPECT_EQ(c.remaining(), 0u);
  EXPECT_THROW(c.charge(), BudgetExhausted);
  EXPECT_EQ(c.total(), 2u);
}

TEST(Translate, IdentityWhenShiftIsZero) {
  TranslatorSpec s = spec_of(TranslatorKind::channel_shift, {3, 3, 3});
  s.shift = 0.0;
  const SyntheticTranslator t = build_synthetic(s);
  RandomSource rng(1);
  QueryCounter c;
  for (int k = 0; k < 20; ++k) {
    const Vec x = random_image(t.dim(), rng);
    EXPECT_EQ(translate(t, x, c), x);
  }
  EXPECT_EQ(c.total(), 20u);
}

TEST(Translate, MaskedOutCoordinatesUnchanged) {
  TranslatorSpec s = spec_of(TranslatorKind::channel_shift, {4, 4, 3});
  s.mask = "channel:1";
  const SyntheticTranslator t = build_synthetic(s);
  RandomSource rng(2);
  QueryCounter c;
  const Vec x = random_image(t.dim(), rng);
  const Vec y = translate(t, x, c);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index col = 0; col < 4; ++col) {
      EXPECT_EQ(y[s.shape.index(r, col, 0)], x[s.shape.index(r, col, 0)]);
      EXPECT_EQ(y[s.shape.index(r, col, 2)], x[s.shape.index(r, col, 2)]);
      EXPECT_NE(y[s.shape.index(r, col, 1)], x[s.shape.index(r, col, 1)]);
    }
}

TEST(Translate, FullMaskPullsTowardTarget) {
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::channel_shift, {2, 2, 3}));
  const Vec x = Vec::Constant(t.dim(), 0.2);
  const Vec y = t.evaluate(x);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    EXPECT_GT(y[i], x[i]);
    EXPECT_LT(y[i], 0.9);
  }
}

TEST(Translate, DeterministicAndCounted) {
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::diag_smooth, {4, 4, 3}));
  RandomSource rng(3);
  QueryCounter c;
  const Vec x = random_image(t.dim(), rng);
  EXPECT_EQ(translate(t, x, c), translate(t, x, c));
  EXPECT_EQ(c.total(), 2u);
  EXPECT_THROW(translate(t, Vec::Zero(5), c), Error);
  Vec bad = x;
  bad[0] = std::nan("");
  EXPECT_THROW(translate(t, bad, c), Error);
  EXPECT_EQ(c.total(), 2u);
}

TEST(Translate, BudgetExhaustedAfterLimit) {
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::diag_smooth, {2, 2, 1}));
  QueryCounter c(1);
  const Vec x = Vec::Constant(4, 0.5);
  translate(t, x, c);
  try {
    translate(t, x, c);
    FAIL();
  } catch (const BudgetExhausted& e) {
    EXPECT_NE(std::string(e.what()).find("budget exhausted"), std::string::npos);
  }
}

TEST(SyntheticTranslator, MapsUnitCubeIntoUnitCube) {
  RandomSource rng(4);
  for (TranslatorKind kind :
       {TranslatorKind::channel_shift, TranslatorKind::diag_smooth, TranslatorKind::local_blur_residual}) {
    TranslatorSpec s = spec_of(kind, {4, 4, 3}, 9);
    s.coupling = 0.3;
    const SyntheticTranslator t = build_synthetic(s);
    for (int k = 0; k < 10000 / 3; ++k) {
      Vec x = random_image(t.dim(), rng);
      if (k % 7 == 0) x = x.array().round().matrix(); // corners of the cube
      const Vec y = t.evaluate(x);
      ASSERT_GE(y.minCoeff(), 0.0);
      ASSERT_LE(y.maxCoeff(), 1.0);
    }
  }
}

TEST(BuildSynthetic, SameSpecSameFunction) {
  for (TranslatorKind kind :
       {TranslatorKind::channel_shift, TranslatorKind::diag_smooth, TranslatorKind::local_blur_residual}) {
    TranslatorSpec s = spec_of(kind, {3, 4, 3}, 42);
    s.coupling = 0.2;
    s.mask = "random:0.5";
    const SyntheticTranslator a = build_synthetic(s);
    const SyntheticTranslator b = build_synthetic(s);
    RandomSource rng(5);
    for (int k = 0; k < 100; ++k) {
      const Vec x = random_image(a.dim(), rng);
      ASSERT_EQ(a.evaluate(x), b.evaluate(x));
    }
  }
}

TEST(BuildSynthetic, RejectsBadParameters) {
  EXPECT_THROW(build_synthetic(spec_of(TranslatorKind::diag_smooth, {0, 4, 3})), Error);
  TranslatorSpec s = spec_of(TranslatorKind::diag_smooth, {2, 2, 3});
  s.coupling = 1.5;
  EXPECT_THROW(build_synthetic(s), Error);
  s = spec_of(TranslatorKind::channel_shift, {2, 2, 3});
  s.mask = "channel:5";
  EXPECT_THROW(build_synthetic(s), Error);
  s.mask = "stripes";
  EXPECT_THROW(build_synthetic(s), Error);
  EXPECT_THROW(parse_translator_kind("gan"), Error);
  EXPECT_EQ(parse_translator_kind("local-blur-residual"), TranslatorKind::local_blur_residual);
}

TEST(FiniteDifferenceGradient, LinearFunction) {
  RandomSource rng(6);
  const Vec c = random_image(10, rng);
  const Vec x = random_image(10, rng);
  const Vec g = finite_difference_gradient([&](const Vec& p) { return c.dot(p); }, x, 1e-5);
  EXPECT_LT((g - c).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FiniteDifferenceGradient, StationaryPoint) {
  const Vec g = finite_difference_gradient([](const Vec& p) { return p.squaredNorm(); }, Vec::Zero(6), 1e-4);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FiniteDifferenceGradient, NonFiniteLossNamesCoordinate) {
  auto loss = [](const Vec& p) { return p[2] > 0.5 ? std::nan("") : 0.0; };
  try {
    finite_difference_gradient(loss, Vec::Constant(4, 0.5), 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 2"), std::string::npos);
  }
}

TEST(FiniteDifferenceGradient, MatchesJacobianTransposeProduct) {
  TranslatorSpec s = spec_of(TranslatorKind::diag_smooth, {2, 2, 3}, 13);
  s.coupling = 0.2;
  const SyntheticTranslator t = build_synthetic(s);
  RandomSource rng(7);
  const Vec x0 = random_image(12, rng);
  const Vec x = x0 + 0.05 * (random_image(12, rng) - Vec::Constant(12, 0.5));
  auto loss = [&](const Vec& p) { return (t.evaluate(p) - x0).squaredNorm(); };
  const Vec g = finite_difference_gradient(loss, x, 1e-4);
  // Central-difference Jacobian assembled here, independent of the library's.
  Mat J(12, 12);
  for (int i = 0; i < 12; ++i) {
    Vec up = x, down = x;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    J.col(i) = (t.evaluate(up) - t.evaluate(down)) / 2e-6;
  }
  const Vec expected = 2.0 * J.transpose() * (t.evaluate(x) - x0);
  EXPECT_LT((g - expected).norm() / expected.norm(), 1e-3);
}

TEST(FiniteDifferenceJacobian, IdentityOracle) {
  TranslatorSpec s = spec_of(TranslatorKind::channel_shift, {2, 3, 3});
  s.shift = 0.0;
  const double h = 1e-6;
  const Mat J = finite_difference_jacobian(build_synthetic(s), Vec::Constant(18, 0.4), h);
  EXPECT_LT((J - Mat::Identity(18, 18)).cwiseAbs().maxCoeff(), 10 * h);
}

TEST(FiniteDifferenceJacobian, UncoupledDiagSmoothIsDiagonal) {
  TranslatorSpec s = spec_of(TranslatorKind::diag_smooth, {4, 4, 3}, 3);
  s.coupling = 0.0;
  RandomSource rng(8);
  const Mat J = finite_difference_jacobian(build_synthetic(s), random_image(48, rng), 1e-6);
  Mat off = J;
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FiniteDifferenceJacobian, BlurIsBanded) {
  const ImageShape shape{5, 6, 1};
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::local_blur_residual, shape));
  RandomSource rng(9);
  const Mat J = finite_difference_jacobian(t, random_image(shape.size(), rng), 1e-6);
  for (Eigen::Index r = 0; r < shape.height; ++r)
    for (Eigen::Index c = 0; c < shape.width; ++c)
      for (Eigen::Index r2 = 0; r2 < shape.height; ++r2)
        for (Eigen::Index c2 = 0; c2 < shape.width; ++c2) {
          const double v = J(shape.index(r, c, 0), shape.index(r2, c2, 0));
          if (std::abs(r - r2) > 1 || std::abs(c - c2) > 1) EXPECT_LT(std::abs(v), 1e-8);
          else EXPECT_GT(std::abs(v), 1e-3);
        }
}

TEST(FiniteDifferenceJacobian, DeskScaleGuard) {
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::diag_smooth, {16, 16, 3}));
  try {
    finite_difference_jacobian(t, Vec::Constant(t.dim(), 0.5), 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("desk-scale only"), std::string::npos);
  }
}

TEST(DiagonalityMetric, AnchorCases) {
  EXPECT_EQ(diagonality_metric(Mat::Identity(5, 5)), 1.0);
  Mat z = Mat::Ones(4, 4);
  z.diagonal().setZero();
  EXPECT_EQ(diagonality_metric(z), 0.0);
  EXPECT_THROW(diagonality_metric(Mat::Zero(3, 3)), Error);
}

TEST(DiagonalityMetric, DecreasesWithCoupling) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TranslatorSpec s = spec_of(TranslatorKind::diag_smooth, {4, 4, 3}, seed);
    const Vec x = synthetic_image(s.shape, seed);
    s.coupling = 0.0;
    const double m0 = diagonality_metric(finite_difference_jacobian(build_synthetic(s), x, 1e-6));
    s.coupling = 0.1;
    const double m1 = diagonality_metric(finite_difference_jacobian(build_synthetic(s), x, 1e-6));
    s.coupling = 0.5;
    const double m5 = diagonality_metric(finite_difference_jacobian(build_synthetic(s), x, 1e-6));
    EXPECT_GE(m0, 0.999);
    EXPECT_GT(m1, m5);
    EXPECT_GT(m0, m1);
  }
}

TEST(Surrogate, ZeroScaleIsExactCopy) {
  const SyntheticTranslator t = build_synthetic(spec_of(TranslatorKind::diag_smooth, {3, 3, 3}, 4));
  const SurrogateModel s = make_surrogate(t, 0.0, 11);
  RandomSource rng(10);
  const Vec x = random_image(t.dim(), rng);
  EXPECT_EQ(s.model.evaluate(x), t.evaluate(x));
  EXPECT_NE(make_surrogate(t, 0.3, 11).model.evaluate(x), t.evaluate(x));
  EXPECT_THROW(make_surrogate(t, -1.0, 11), Error);
}

TEST(DiagonalLinearOracle, EvaluatesElementwise) {
  Vec d(3);
  d << 0.5, 2.0, 1.0;
  const DiagonalLinear o(d);
  EXPECT_EQ(o.evaluate(Vec::Ones(3)), d);
}
