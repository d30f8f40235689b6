#include <gtest/gtest.h>

#include "corpus.hpp"

using namespace wg;

// ---- rotation number ----

TEST(Liouville, ContinuedFractionRecurrence) {
  const auto al = liouville_alpha(4);
  ASSERT_EQ(al.levels(), 4);
  EXPECT_EQ(al.p[0], 1);
  EXPECT_EQ(al.q[0], 1);
  EXPECT_EQ(al.partial_quotients[2], 4);      // 2^{q_2}, q_2 = 2
  EXPECT_EQ(al.partial_quotients[3], 19683);  // 3^{q_3}, q_3 = 9
  for (int i = 2; i < al.levels(); ++i) {
    EXPECT_EQ(al.p[i], al.partial_quotients[i] * al.p[i - 1] + al.p[i - 2]);
    EXPECT_EQ(al.q[i], al.partial_quotients[i] * al.q[i - 1] + al.q[i - 2]);
  }
}

TEST(Liouville, DenominatorsIncrease) {
  const auto al = liouville_alpha(4);
  for (int i = 1; i < al.levels(); ++i) EXPECT_LT(al.q[i - 1], al.q[i]);
}

TEST(Liouville, CertificateHoldsExactly) {
  const auto al = liouville_alpha(4);
  const auto cert = liouville_certificate(al);
  ASSERT_EQ(cert.size(), 3u);
  for (const auto& c : cert) {
    EXPECT_TRUE(c.holds) << "m=" << c.m;
    EXPECT_LE(c.lhs, BigRational(1));
  }
}

TEST(Liouville, BudgetExceeded) {
  EXPECT_THROW(liouville_alpha(5, 1000.0), ResourceError);
  EXPECT_THROW(liouville_alpha(1), DomainError);
}

// ---- quasiperiodic measure ----

namespace {

PeriodicMeasure unit_base() { return {make_measure({{0.0, 1.0}, {0.5, -0.25}}, {}, {0.0, 1.0}), 1.0}; }
PeriodicMeasure second_base() {
  return {make_measure({{0.0, 1.0}, {0.3, 0.5}}, {{0.6, 0.9, Poly::constant(-0.5)}}, {0.0, 1.0}), 1.0};
}

}  // namespace

TEST(Quasiperiodic, DegenerateRotationGivesDoubleComb) {
  LiouvilleAlpha al;
  al.p = {1, 1};
  al.q = {1, 1};
  al.partial_quotients = {1, 1};
  const PeriodicMeasure delta{dirac(0.0, {0.0, 1.0}), 1.0};
  const auto qp = quasiperiodic_measure(delta, delta, al, {-3.0, 3.0});
  EXPECT_EQ(qp.alpha_value, 1.0);
  ASSERT_EQ(qp.mu.atoms().size(), 7u);
  for (const auto& a : qp.mu.atoms()) {
    EXPECT_EQ(a.x, std::round(a.x));
    EXPECT_EQ(a.w, cplx(2.0));
  }
}

TEST(Quasiperiodic, IntegerTranslationOnlySeesSecondComponent) {
  const auto al = liouville_alpha(4);
  for (int m : {2, 3}) {
    const auto row = quasiperiodic_row(unit_base(), second_base(), al, m, 1e-10);
    EXPECT_NEAR(row.defect.upper, row.defect_mu2.upper, 1e-9) << "m=" << m;
    EXPECT_NEAR(row.defect.lower, row.defect_mu2.lower, 1e-9) << "m=" << m;
  }
}

TEST(Quasiperiodic, BoundHoldsAtSecondLevel) {
  const auto al = liouville_alpha(4);
  const auto row = quasiperiodic_row(unit_base(), second_base(), al, 2);
  EXPECT_EQ(row.period, 1.0);
  EXPECT_GT(row.gap, 0.0);
  EXPECT_TRUE(row.dominated());
}

TEST(Quasiperiodic, StretchKeepsWeights) {
  const auto P = stretch_period(second_base(), 0.5);
  EXPECT_EQ(P.period(), 0.5);
  EXPECT_EQ(P.base().atoms()[1].x, 0.15);
  EXPECT_EQ(P.base().atoms()[1].w, cplx(0.5));
  EXPECT_EQ(P.base().segments()[0].rho(0.0), cplx(-0.5));
}

// ---- two-point boundary problem ----

TEST(Interior, BoundaryValues) {
  EXPECT_NEAR(interior_solution(0.7, 0.2, 3.0, 0.0), 0.7, 1e-15);
  EXPECT_NEAR(interior_solution(0.7, 0.2, 3.0, 3.0), 0.2, 1e-15);
}

TEST(Interior, SymmetricCase) {
  const double L = 2.5;
  for (double t = 0.0; t <= L; t += 0.125)
    EXPECT_NEAR(interior_solution(1.0, 1.0, L, t), std::cosh(t - 0.5 * L) / std::cosh(0.5 * L), 1e-14);
}

TEST(Interior, PositiveForPositiveData) {
  wgtest::Corpus corpus(61);
  for (int trial = 0; trial < 200; ++trial) {
    const double b = corpus.uniform(1e-6, 2.0), c = corpus.uniform(1e-6, 2.0), L = corpus.uniform(0.1, 50.0);
    EXPECT_GT(interior_solution(b, c, L, corpus.uniform(0.0, L)), 0.0);
  }
}

TEST(Interior, DerivativeMatchesFiniteDifference) {
  const double b = 0.8, c = 0.1, L = 4.0, h = 1e-5;
  for (double t = 0.5; t < L; t += 0.5) {
    const double fd = (interior_solution(b, c, L, t + h) - interior_solution(b, c, L, t - h)) / (2.0 * h);
    EXPECT_NEAR(interior_derivative(b, c, L, t), fd, 1e-8);
  }
}

TEST(MassDifference, EqualEndsCancel) { EXPECT_EQ(mass_difference(0.4, 0.4, 3.0), 0.0); }

TEST(MassDifference, ClosedForm) {
  const double b = 1.0, c = 0.25, L = 3.0;
  EXPECT_NEAR(mass_difference(b, c, L), (2.0 * c / b - 2.0 * b / c) / (std::exp(L) - std::exp(-L)), 1e-15);
  EXPECT_NEAR(log_mass_difference(2, L), std::log(std::abs(mass_difference(b, c, L))), 1e-14);
  EXPECT_THROW(mass_difference(0.0, 1.0, 1.0), DomainError);
}

// Two arcs of length l1 flanking [0, L] with the outer ratio a/b = d/c: the
// atom weights follow from the derivative jumps.
TEST(MassDifference, MatchesDerivativeJumps) {
  const double b = 1.0, c = 0.125, L = 5.0, l1 = 1.0, ratio = 0.5;
  const double a = ratio * b, d = ratio * c;
  const double at_b = (interior_derivative(b, c, L, 0.0) - interior_derivative(a, b, l1, l1)) / b;
  const double at_c = (interior_derivative(c, d, l1, 0.0) - interior_derivative(b, c, L, L)) / c;
  EXPECT_NEAR(at_b - at_c, mass_difference(b, c, L), 1e-14);
}

// ---- sharpness construction ----

TEST(Sharpness, SmallLengthRuleLevels) {
  const auto S = sharpness_construction(3, {.K0 = 1.0});
  EXPECT_EQ(S.l[1], 1.0);
  EXPECT_EQ(S.l[2], 8.0);
  EXPECT_EQ(S.l[3], 129.0);
  EXPECT_EQ(S.p[1], 1.0);
  EXPECT_EQ(S.p[2], 10.0);
  EXPECT_EQ(S.p[3], 169.0);
  EXPECT_EQ(S.u_at(S.p[1]), 0.5);
  EXPECT_EQ(S.u_at(2.0 * S.p[2]), 1.0 / 16.0);
}

TEST(Sharpness, PropagationReachesPrescribedValues) {
  const auto S = sharpness_construction(3, {.K0 = 1.0});
  const auto [u0, du0] = S.eval(0.0);
  ASSERT_EQ(u0, 1.0);
  const auto tr = propagate(S.measure, -1.0, 0.0, {u0, du0}, {S.p[1], 2.0 * S.p[2]});
  EXPECT_NEAR(tr.u[0].real(), 0.5, 1e-6 * 0.5);
  EXPECT_NEAR(tr.u[1].real(), 1.0 / 16.0, 1e-6 / 16.0);
  EXPECT_NEAR(tr.u[1].imag(), 0.0, 1e-15);
}

TEST(Sharpness, LengthRatioDecreases) {
  for (double K0 : {1.0, 24.0}) {
    const auto S = sharpness_construction(4, {.K0 = K0});
    for (int m = 2; m <= 4; ++m) EXPECT_LT(S.lk_ratio(m), S.lk_ratio(m - 1)) << "K0=" << K0 << " m=" << m;
  }
}

TEST(Sharpness, RejectsUnsupportedDepth) {
  EXPECT_THROW(sharpness_construction(1), ResourceError);
  EXPECT_THROW(sharpness_construction(6), ResourceError);
}

TEST(SharpnessReport, SecondLevelIdentitiesAtSmallLengths) {
  const auto S = sharpness_construction(3, {.K0 = 1.0});
  const auto rep = sharpness_report(S, 0.5, 1e-12);
  const auto& r = rep.rows[1];
  EXPECT_TRUE(r.two_atom_configuration);
  EXPECT_NEAR(r.mass_diff, r.mass_diff_formula, 1e-10 * std::abs(r.mass_diff_formula));
  const double formula = std::exp(log_mass_difference(2, r.l));
  EXPECT_NEAR(std::abs(r.mass_diff), formula, 1e-14);
  EXPECT_LE(r.seminorm_defect.lower, formula + 1e-12);
  EXPECT_GE(r.seminorm_defect.upper, formula - 1e-12);
  EXPECT_NEAR(r.gordon_defect.upper, formula, 1e-12);
}

TEST(SharpnessReport, DefaultLengthsCertificates) {
  const auto S = sharpness_construction(3);
  const auto rep = sharpness_report(S, 0.9);
  EXPECT_LE(rep.residual_abs, 1e-8);
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    EXPECT_LT(rep.rows[k].log_ratio, rep.rows[k - 1].log_ratio);
    EXPECT_TRUE(rep.rows[k].two_atom_configuration);
    EXPECT_LE(rep.rows[k].log_defect, rep.rows[k].log_bound);
  }
  EXPECT_GE(rep.C_mu, 0.95);
  EXPECT_LE(rep.max_abs_mass, 2.0 + 1e-12);
  for (std::size_t k = 1; k < rep.level_l2.size(); ++k) EXPECT_LT(rep.level_l2[k] / rep.level_l2[k - 1], 1.0);
}

TEST(SharpnessReport, Reproducible) {
  const auto S1 = sharpness_construction(3, {.K0 = 2.0});
  const auto S2 = sharpness_construction(3, {.K0 = 2.0});
  const auto a = sharpness_report(S1, 0.9, 1e-9, 0.05, 1);
  const auto b = sharpness_report(S2, 0.9, 1e-9, 0.05, 3);
  ASSERT_EQ(S1.T, S2.T);
  ASSERT_EQ(S1.mass, S2.mass);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].log_defect, b.rows[k].log_defect);
    EXPECT_EQ(a.rows[k].seminorm_defect.upper, b.rows[k].seminorm_defect.upper);
    EXPECT_EQ(a.rows[k].gordon_defect.upper, b.rows[k].gordon_defect.upper);
  }
  EXPECT_EQ(a.residual_abs, b.residual_abs);
  EXPECT_EQ(a.C_mu, b.C_mu);
}
