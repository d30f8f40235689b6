#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "weakgordon/mollify.hpp"
#include "weakgordon/parallel.hpp"
#include "weakgordon/propagator.hpp"
#include "weakgordon/seminorm.hpp"

namespace wg {

struct GordonRow {
  double p = 0.0;
  SeminormResult defect;
  double ratio = 0.0;      ///< e^{Cp} * defect.upper
  double log_ratio = 0.0;  ///< C p + ln defect.upper
  double log_rate = 0.0;   ///< -(1/p) ln defect.upper, +inf when the defect vanishes
  bool zero_defect = false;
};

struct GordonReport {
  std::vector<GordonRow> rows;
  double C_mu = 0.0;
  bool C_infinite = false;
  double E_mu = 0.0;
  std::vector<std::pair<double, double>> r_profile;
  std::size_t tail = 3;
};

/// ||mu - mu(. + p)||_{[-p, p]}.
inline SeminormResult translation_defect(const LocalMeasure& mu, double p, double tol = 1e-9) {
  if (!(p > 0.0)) throw DomainError("translation defect needs p > 0");
  if (mu.window().lo > -p || mu.window().hi < 2.0 * p)
    throw DomainError("translation defect at p = " + detail::fmt(p) + " needs the window to contain [-p, 2p]");
  return interval_seminorm(mu - translate(mu, p), -p, p, tol);
}

namespace detail {

inline GordonRow make_row(double p, SeminormResult defect, double C) {
  GordonRow row;
  row.p = p;
  row.defect = defect;
  if (defect.upper <= 0.0) {
    row.zero_defect = true;
    row.ratio = 0.0;
    row.log_ratio = -std::numeric_limits<double>::infinity();
    row.log_rate = std::numeric_limits<double>::infinity();
  } else {
    const double ld = std::log(defect.upper);
    row.log_ratio = C * p + ld;
    row.ratio = std::exp(row.log_ratio);
    row.log_rate = -ld / p;
  }
  return row;
}

}  // namespace detail

inline double gordon_ratio(const LocalMeasure& mu, double p, double C, double tol = 1e-9) {
  return detail::make_row(p, translation_defect(mu, p, tol), C).ratio;
}

/// Rows for the given periods and the tail statistic C_mu = max of the log
/// rates over the last `tail` periods; a vanishing defect in the tail sets
/// the infinite flag.
inline GordonReport estimate_C_mu(const LocalMeasure& mu, const std::vector<double>& periods, double C = 0.0,
                                  double tol = 1e-9, std::size_t tail = 3, unsigned threads = 1) {
  if (periods.empty()) throw DomainError("estimate_C_mu needs at least one period");
  GordonReport rep;
  rep.tail = tail;
  rep.rows.resize(periods.size());
  parallel_for(periods.size(), threads, [&](std::size_t i) {
    rep.rows[i] = detail::make_row(periods[i], translation_defect(mu, periods[i], tol), C);
  });
  const std::size_t first = periods.size() > tail ? periods.size() - tail : 0;
  rep.C_mu = -std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i < rep.rows.size(); ++i) {
    if (rep.rows[i].zero_defect) rep.C_infinite = true;
    rep.C_mu = std::max(rep.C_mu, rep.rows[i].log_rate);
  }
  return rep;
}

/// Full report including the r-profile r -> ||mu||_{unif,r} and
/// E_mu = C_mu^2 - min over the profile.
inline GordonReport exclusion_bound(const LocalMeasure& mu, const std::vector<double>& periods,
                                    const std::vector<double>& r_grid, double C = 0.0, double tol = 1e-9,
                                    std::size_t tail = 3, unsigned threads = 1) {
  GordonReport rep = estimate_C_mu(mu, periods, C, tol, tail, threads);
  rep.r_profile.resize(r_grid.size());
  parallel_for(r_grid.size(), threads, [&](std::size_t i) { rep.r_profile[i] = {r_grid[i], norm_unif(mu, r_grid[i])}; });
  double inf_r = std::numeric_limits<double>::infinity();
  for (auto [r, v] : rep.r_profile) inf_r = std::min(inf_r, v);
  if (rep.r_profile.empty()) inf_r = norm_unif(mu);
  rep.E_mu = rep.C_infinite ? std::numeric_limits<double>::infinity() : rep.C_mu * rep.C_mu - inf_r;
  return rep;
}

/// Cut-off psi: zero outside [-a, p + a], one on [a, p - a], affine between.
inline PiecewiseAffine approximant_cutoff(double p, double a) {
  if (a == 0.5 * p) return {{-a, a, p + a}, {0.0, 1.0, 0.0}};
  return {{-a, a, p - a, p + a}, {0.0, 1.0, 1.0, 0.0}};
}

/// Sum over k of (psi mu)(. + k p), folded into one period [0, p).
inline PeriodicMeasure periodic_approximant(const LocalMeasure& mu, double p, double a) {
  if (!(p > 0.0) || !(a > 0.0) || a > 0.5 * p) throw DomainError("periodic approximant needs 0 < a <= p/2");
  if (mu.window().lo > -a || mu.window().hi < p + a)
    throw DomainError("periodic approximant needs the window to contain [-a, p + a]");
  const LocalMeasure cut = multiply_lipschitz(mu, approximant_cutoff(p, a));
  auto fold = [p](double y) {
    double x = y - std::floor(y / p) * p;
    if (x >= p) x -= p;
    if (x < 0.0) x += p;
    return x;
  };
  std::vector<Atom> atoms;
  for (const auto& at : cut.atoms()) atoms.push_back({fold(at.x), at.w});
  std::vector<Segment> segs;
  for (const auto& s : cut.segments()) {
    std::vector<double> cuts{s.a};
    for (double k = std::floor(s.a / p) + 1.0; k * p < s.b; k += 1.0) cuts.push_back(k * p);
    cuts.push_back(s.b);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      if (!(lo < hi)) continue;
      const double shift = std::floor((0.5 * (lo + hi)) / p) * p;
      // The overhang (p, p + a] folds onto (0, a]; rounding of p + a must not push it past a.
      const double f_hi = shift > 0.0 ? std::min(hi - shift, a) : std::min(hi - shift, p);
      if (lo - shift < f_hi) segs.push_back({lo - shift, f_hi, s.rho.shifted(lo - s.a)});
    }
  }
  return {make_measure(std::move(atoms), detail::combine_segments(std::move(segs)), {0.0, p}), p};
}

struct ThreePointCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// ||(u(0), u'(0+))|| <= 2 max over t in {-p, p, 2p} of ||(u(t), u'(t+))||.
inline ThreePointCheck periodic_three_point_check(const PeriodicMeasure& P, cplx z, State init) {
  const double p = P.period();
  const LocalMeasure mu = materialize(P, {-p - 1.0, 2.0 * p + 1.0});
  const auto tr = propagate(mu, z, 0.0, init, {-p, 0.0, p, 2.0 * p});
  auto norm = [](cplx u, cplx du) { return std::sqrt(std::norm(u) + std::norm(du)); };
  ThreePointCheck out;
  out.lhs = norm(init.u, init.du);
  for (std::size_t i : {0u, 2u, 3u}) out.rhs = std::max(out.rhs, norm(tr.u[i], tr.du[i]));
  out.rhs *= 2.0;
  out.pass = out.lhs <= out.rhs + 1e-9;
  return out;
}

}  // namespace wg
