#include <gtest/gtest.h>

#include <random>

#include "weakgordon/polynomial.hpp"

using wg::cplx;
using wg::Poly;

TEST(Poly, TrimsTrailingZeros) {
  const Poly p({1.0, 2.0, 0.0, 0.0});
  EXPECT_EQ(p.degree(), 1);
  EXPECT_TRUE(Poly({0.0}).is_zero());
}

TEST(Poly, EvaluateDerivativeAntiderivative) {
  const Poly p({1.0, -2.0, 3.0});  // 1 - 2s + 3s^2
  EXPECT_EQ(p(2.0), cplx(9.0));
  EXPECT_EQ(p.derivative(), Poly({-2.0, 6.0}));
  EXPECT_EQ(p.antiderivative(), Poly({0.0, 1.0, -1.0, 1.0}));
  EXPECT_NEAR(p.integral(0.0, 1.0).real(), 1.0, 1e-15);
}

TEST(Poly, ShiftAndScaleMatchPointwise) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<cplx> c;
    for (int k = 0; k < 6; ++k) c.emplace_back(U(rng), U(rng));
    const Poly p(c);
    const double d = U(rng), r = U(rng), s = U(rng);
    EXPECT_LT(std::abs(p.shifted(d)(s) - p(s + d)), 1e-10);
    EXPECT_LT(std::abs(p.scaled_arg(r)(s) - p(r * s)), 1e-10);
  }
}

TEST(Poly, ProductAndPower) {
  const Poly a({1.0, 1.0});
  EXPECT_EQ(a * a, Poly({1.0, 2.0, 1.0}));
  EXPECT_EQ(a.pow(3), Poly({1.0, 3.0, 3.0, 1.0}));
  EXPECT_TRUE((a * Poly{}).is_zero());
}

TEST(Poly, RealImagConj) {
  const Poly p({cplx(1, 2), cplx(3, -4)});
  EXPECT_EQ(p.real_part(), Poly({1.0, 3.0}));
  EXPECT_EQ(p.imag_part(), Poly({2.0, -4.0}));
  EXPECT_EQ(p.conj(), Poly({cplx(1, -2), cplx(3, 4)}));
  EXPECT_FALSE(p.is_real());
}

TEST(Poly, AbsBoundDominates) {
  const Poly p({cplx(1, 1), -2.0, 0.5});
  for (double s = -1.5; s <= 1.5; s += 0.01) EXPECT_LE(std::abs(p(s)), p.abs_bound(1.5) + 1e-12);
}

TEST(Poly, RealRootsInsideInterval) {
  // (s - 0.25)(s - 0.5)(s - 2) = s^3 - 2.75 s^2 + 1.625 s - 0.25
  const std::vector<double> c{-0.25, 1.625, -2.75, 1.0};
  const auto roots = wg::real_roots(c, 0.0, 1.0);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], 0.25, 1e-12);
  EXPECT_NEAR(roots[1], 0.5, 1e-12);
}

TEST(Poly, AbsIntegralOfSignChangingLinear) {
  // integral of |s - 1| over [0, 2] = 1
  EXPECT_NEAR(wg::abs_integral(Poly({-1.0, 1.0}), 0.0, 2.0), 1.0, 1e-14);
  EXPECT_NEAR(wg::abs_integral(Poly({cplx(1, 1), cplx(-1, -1)}), 0.0, 2.0), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(wg::abs_integral(Poly({cplx(0, 1)}), 0.0, 3.0), 3.0, 1e-14);
}
