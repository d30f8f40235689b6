#include <gtest/gtest.h>

#include "corpus.hpp"
#include "weakgordon/measure.hpp"
#include "weakgordon/mollify.hpp"

using namespace wg;

namespace {

LocalMeasure comb(Window w) {
  std::vector<Atom> atoms;
  for (double n = std::ceil(w.lo); n <= w.hi; n += 1.0) atoms.push_back({n, 1.0});
  return make_measure(std::move(atoms), {}, w);
}

}  // namespace

TEST(MakeMeasure, DiracRepresentation) {
  const auto mu = make_measure({{0.0, 1.0}}, {}, {-2.0, 2.0});
  ASSERT_EQ(mu.atoms().size(), 1u);
  EXPECT_EQ(mu.atoms()[0].x, 0.0);
  EXPECT_EQ(mu.atoms()[0].w, cplx(1.0));
  EXPECT_TRUE(mu.segments().empty());
}

TEST(MakeMeasure, LebesgueRestricted) {
  const auto mu = make_measure({}, {{-5.0, 5.0, Poly::constant(1.0)}}, {-5.0, 5.0});
  ASSERT_EQ(mu.segments().size(), 1u);
  EXPECT_EQ(mu.density(0.3), cplx(1.0));
  EXPECT_EQ(mu.sign_class(), 1);
}

TEST(MakeMeasure, CoincidentAtomsCancel) {
  const auto mu = make_measure({{0.5, 1.0}, {0.5, -1.0}}, {}, {0.0, 1.0});
  EXPECT_TRUE(mu.atoms().empty());
  EXPECT_TRUE(mu.empty());
}

TEST(MakeMeasure, RejectsBadInput) {
  EXPECT_THROW(make_measure({{3.0, 1.0}}, {}, {0.0, 1.0}), ValidationError);
  EXPECT_THROW(make_measure({}, {{0.0, 2.0, Poly::constant(1.0)}, {1.0, 3.0, Poly::constant(1.0)}}, {0.0, 3.0}),
               ValidationError);
  EXPECT_THROW(make_measure({}, {}, {1.0, 1.0}), ValidationError);
  std::vector<cplx> high(kMaxDegree + 2, cplx(1.0));
  EXPECT_THROW(make_measure({}, {{0.0, 1.0, Poly(high)}}, {0.0, 1.0}), Error);
}

TEST(Phi, LebesgueAntiderivative) { EXPECT_DOUBLE_EQ(lebesgue({-1.0, 1.0}).phi(0.7).real(), 0.7); }

TEST(Phi, DipoleIndicator) {
  const double eps = 0.25;
  const auto mu = make_measure({{eps, 1.0}, {-eps, -1.0}}, {}, {-1.0, 1.0});
  for (double t : {-0.9, -0.26, 0.25, 0.5, 1.0}) EXPECT_EQ(mu.phi(t), cplx(1.0)) << t;
  for (double t : {-0.25, -0.1, 0.0, 0.2, 0.2499}) EXPECT_EQ(mu.phi(t), cplx(0.0)) << t;
}

TEST(Phi, CombCountsIntegers) { EXPECT_EQ(comb({-3.0, 3.0}).phi(-0.5), cplx(-1.0)); }

TEST(Phi, CocycleOnCorpus) {
  wgtest::Corpus corpus(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = corpus.measure({.complex = trial % 2 == 1});
    for (int k = 0; k < 10; ++k) {
      double s = corpus.uniform(-6.0, 6.0), t = corpus.uniform(-6.0, 6.0);
      if (s > t) std::swap(s, t);
      EXPECT_LT(std::abs(mu.phi(t) - mu.phi(s) - mu.mass(s, t)), 1e-12);
    }
  }
}

TEST(Restrict, HalfOpenLeftEdge) {
  const auto mu = make_measure({{0.0, 1.0}, {2.0, 1.0}}, {}, {-1.0, 3.0});
  EXPECT_TRUE(restrict(mu, 0.0, 1.0).empty());
  EXPECT_EQ(restrict(mu, -1.0, 0.0).atoms().size(), 1u);
}

TEST(Translate, MovesAtomsAndWindow) {
  const auto t = translate(dirac(0.0, {-2.0, 2.0}), 1.0);
  ASSERT_EQ(t.atoms().size(), 1u);
  EXPECT_EQ(t.atoms()[0].x, -1.0);
  const auto l = translate(lebesgue({0.0, 3.0}), 2.5);
  EXPECT_EQ(l.window(), (Window{-2.5, 0.5}));
  EXPECT_EQ(l.segments()[0].rho, Poly::constant(1.0));
}

TEST(Translate, CompositionLawIsExactOnDyadicData) {
  wgtest::Corpus corpus(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Atom> atoms;
    for (int i = 0; i < 10; ++i) atoms.push_back({std::ldexp(corpus.integer(-1000, 1000), -8), corpus.weight(true, 1.0)});
    const auto mu = make_measure(atoms, {{-1.5, 0.25, Poly::constant(2.0)}}, {-4.0, 4.0});
    const double p = std::ldexp(corpus.integer(-64, 64), -4), q = std::ldexp(corpus.integer(-64, 64), -4);
    const auto a = translate(translate(mu, p), q), b = translate(mu, p + q);
    EXPECT_EQ(a.atoms(), b.atoms());
    EXPECT_EQ(a.segments(), b.segments());
    EXPECT_EQ(a.window(), b.window());
  }
}

TEST(Translate, CompositionLawUpToRounding) {
  wgtest::Corpus corpus(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = corpus.measure();
    const double p = corpus.uniform(-3.0, 3.0), q = corpus.uniform(-3.0, 3.0);
    const auto a = translate(translate(mu, p), q), b = translate(mu, p + q);
    ASSERT_EQ(a.atoms().size(), b.atoms().size());
    for (std::size_t i = 0; i < a.atoms().size(); ++i) {
      EXPECT_NEAR(a.atoms()[i].x, b.atoms()[i].x, 1e-14);
      EXPECT_EQ(a.atoms()[i].w, b.atoms()[i].w);
    }
  }
}

TEST(Scale, DiracAndLebesgue) {
  const auto d = scale(dirac(1.0, {-2.0, 2.0}), 2.0);
  ASSERT_EQ(d.atoms().size(), 1u);
  EXPECT_EQ(d.atoms()[0].x, 0.5);
  EXPECT_EQ(d.atoms()[0].w, cplx(2.0));
  const auto l = scale(lebesgue({-3.0, 3.0}), 3.0);
  EXPECT_EQ(l.window(), (Window{-1.0, 1.0}));
  EXPECT_EQ(l.density(0.2), cplx(9.0));
}

TEST(Scale, IdentityAndComposition) {
  wgtest::Corpus corpus(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = corpus.measure({.complex = true});
    const auto one = scale(mu, 1.0);
    EXPECT_EQ(one.atoms(), mu.atoms());
    EXPECT_EQ(one.segments(), mu.segments());
    const double r = std::ldexp(1.0, corpus.integer(-3, 3)), s = std::ldexp(1.0, corpus.integer(-3, 3));
    const auto a = scale(scale(mu, r), s), b = scale(mu, r * s);
    EXPECT_EQ(a.atoms(), b.atoms());
    EXPECT_EQ(a.segments(), b.segments());
  }
}

TEST(TotalVariation, Examples) {
  EXPECT_DOUBLE_EQ(total_variation(make_measure({{0.0, 1.0}, {1.0, -1.0}}, {}, {-1.0, 2.0})), 2.0);
  EXPECT_DOUBLE_EQ(total_variation(lebesgue({0.0, 3.0})), 3.0);
  const auto t = make_measure({}, {{-1.0, 1.0, Poly({-1.0, 1.0})}}, {-1.0, 1.0});
  EXPECT_NEAR(total_variation(t, -1.0, 1.0), 1.0, 1e-15);
}

TEST(TotalVariation, AdditiveOnAdjacentIntervals) {
  wgtest::Corpus corpus(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = corpus.measure({.complex = trial % 3 == 0});
    double a = corpus.uniform(-6, 6), b = corpus.uniform(-6, 6), c = corpus.uniform(-6, 6);
    double v[3] = {a, b, c};
    std::sort(v, v + 3);
    const double whole = total_variation(mu, v[0], v[2]);
    const double parts = total_variation(mu, v[0], v[1]) + total_variation(mu, v[1], v[2]);
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, whole));
  }
}

TEST(NormUnif, CombAndLebesgue) {
  EXPECT_DOUBLE_EQ(norm_unif(comb({-10.0, 10.0}), 1.0), 1.0);
  for (double r : {0.5, 1.0, 2.5, 7.0}) EXPECT_NEAR(norm_unif(lebesgue({-5.0, 5.0}), r), 1.0, 1e-15);
}

TEST(NormUnif, DominatesUnitIntervalMasses) {
  wgtest::Corpus corpus(15);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = corpus.measure();
    const double nu = norm_unif(mu);
    EXPECT_LE(nu, 5.0 + 1e-12);
    for (int k = 0; k < 40; ++k) {
      const double x = corpus.uniform(-6.0, 5.0);
      EXPECT_LE(total_variation(mu, x, x + 1.0), nu + 1e-12);
    }
  }
}

TEST(Mollify, DiracGivesKernel) {
  const int n = 4;
  const auto m = mollify(dirac(0.0, {-2.0, 2.0}), n);
  const double c = 35.0 / 32.0;
  for (double x : {-0.2, -0.1, 0.0, 0.05, 0.2}) {
    const double y = n * x;
    EXPECT_NEAR(m.density(x).real(), n * c * std::pow(1.0 - y * y, 3), 1e-12) << x;
  }
  EXPECT_EQ(m.density(0.3), cplx(0.0));
  EXPECT_NEAR(m.mass(-1.0, 1.0).real(), 1.0, 1e-13);
}

TEST(Mollify, ZeroStaysZero) { EXPECT_TRUE(mollify(zero_measure({-1.0, 1.0}), 8).empty()); }

TEST(Mollify, UnifNormDoesNotGrow) {
  wgtest::Corpus corpus(16);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = corpus.measure({.complex = trial % 2 == 0});
    const int n = 1 << corpus.integer(1, 6);
    EXPECT_LE(norm_unif(mollify(mu, n)), norm_unif(mu) + 1e-9);
  }
}

TEST(Mollify, LocalMassControl) {
  wgtest::Corpus corpus(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = corpus.measure();
    const int n = 1 << corpus.integer(2, 6);
    const auto m = mollify(mu, n);
    const double a = corpus.uniform(-4.0, 3.0), b = a + corpus.uniform(0.1, 1.0);
    EXPECT_LE(total_variation(m, a, b), total_variation(mu, a - 2.0 / n, b + 2.0 / n) + 1e-9);
  }
}

TEST(MultiplyLipschitz, OneIsIdentityAndTentKeepsDirac) {
  wgtest::Corpus corpus(18);
  const auto mu = corpus.measure();
  const PiecewiseAffine one{{-6.0, 6.0}, {1.0, 1.0}};
  const auto same = multiply_lipschitz(mu, one);
  EXPECT_EQ(same.atoms(), mu.atoms());
  EXPECT_EQ(same.segments(), mu.segments());
  const PiecewiseAffine tent{{-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0}};
  const auto d = multiply_lipschitz(dirac(0.0, {-2.0, 2.0}), tent);
  ASSERT_EQ(d.atoms().size(), 1u);
  EXPECT_EQ(d.atoms()[0].w, cplx(1.0));
}

TEST(Materialize, CombAtoms) {
  const PeriodicMeasure P(dirac(0.0, {0.0, 1.0}), 1.0);
  const auto mu = materialize(P, {-2.5, 2.5});
  std::vector<double> xs;
  for (const auto& a : mu.atoms()) xs.push_back(a.x);
  EXPECT_EQ(xs, (std::vector<double>{-2, -1, 0, 1, 2}));
}

TEST(Materialize, LebesgueBase) {
  const PeriodicMeasure P(lebesgue({0.0, 1.0}), 1.0);
  const auto mu = materialize(P, {-1.5, 2.25});
  EXPECT_NEAR(total_variation(mu), 3.75, 1e-14);
  EXPECT_EQ(mu.density(-1.2), cplx(1.0));
  EXPECT_DOUBLE_EQ(norm_unif(P), 1.0);
}

TEST(Materialize, TranslationInvariantUpToClipping) {
  wgtest::Corpus corpus(19);
  const double p = 1.5;
  const auto P = corpus.periodic(p);
  const auto mu = materialize(P, {0.0, 3.0 * p});
  const auto shifted = clip(translate(mu, p), {0.0, 2.0 * p});
  const auto ref = clip(mu, {0.0, 2.0 * p});
  ASSERT_EQ(shifted.atoms().size(), ref.atoms().size());
  for (std::size_t i = 0; i < ref.atoms().size(); ++i) {
    EXPECT_NEAR(shifted.atoms()[i].x, ref.atoms()[i].x, 1e-12);
    EXPECT_EQ(shifted.atoms()[i].w, ref.atoms()[i].w);
  }
}

TEST(Materialize, BudgetIsEnforced) {
  const PeriodicMeasure P(dirac(0.0, {0.0, 1.0}), 1.0);
  EXPECT_THROW(materialize(P, {0.0, 1e7}, 1000), ResourceError);
}
