#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "weakgordon/gordon.hpp"
#include "weakgordon/measure.hpp"
#include "weakgordon/propagator.hpp"
#include "weakgordon/seminorm.hpp"

namespace wg {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Liouville-type rotation number
// ---------------------------------------------------------------------------

/// Continued fraction [0; a_1, a_2, ...] with a_1 = 1 and a_{m+1} = max(1, m^{q_m}).
/// Index m - 1 of each vector holds level m.
struct LiouvilleAlpha {
  std::vector<BigInt> partial_quotients;
  std::vector<BigInt> p;
  std::vector<BigInt> q;
  double B = 1.0;

  [[nodiscard]] int levels() const { return static_cast<int>(p.size()); }
  [[nodiscard]] BigRational convergent(int m) const { return BigRational(p.at(m - 1), q.at(m - 1)); }
  /// The highest stored convergent p_M / q_M.
  [[nodiscard]] BigRational proxy() const { return convergent(levels()); }
};

inline LiouvilleAlpha liouville_alpha(int levels, double bit_budget = static_cast<double>(1u << 22)) {
  if (levels < 2) throw DomainError("liouville_alpha needs at least two levels");
  LiouvilleAlpha al;
  BigInt p_prev = 1, q_prev = 0, p_cur = 0, q_cur = 1;
  BigInt a = 1;
  for (int m = 1; m <= levels; ++m) {
    if (m > 1) {
      const int base = m - 1;
      if (base > 1) {
        const double bits = al.q.back().convert_to<double>() * std::log2(static_cast<double>(base));
        if (!(bits <= bit_budget))
          throw ResourceError("partial quotient a_" + std::to_string(m) + " = " + std::to_string(base) +
                              "^q needs about " + detail::fmt(bits) + " bits, over the budget of " +
                              detail::fmt(bit_budget));
        a = boost::multiprecision::pow(BigInt(base), al.q.back().convert_to<unsigned>());
      } else {
        a = 1;
      }
    }
    const BigInt p_next = a * p_cur + p_prev, q_next = a * q_cur + q_prev;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
    al.partial_quotients.push_back(a);
    al.p.push_back(p_cur);
    al.q.push_back(q_cur);
  }
  return al;
}

struct LiouvilleCheck {
  int m = 0;
  BigRational lhs;  ///< |alpha_M - p_m/q_m| m^{q_m}
  double lhs_upper = 0.0;
  bool holds = false;
};

/// The defining inequality |alpha_M - p_m/q_m| <= B m^{-q_m} for m < M, in exact arithmetic.
inline std::vector<LiouvilleCheck> liouville_certificate(const LiouvilleAlpha& al) {
  std::vector<LiouvilleCheck> out;
  const BigRational alpha = al.proxy();
  for (int m = 1; m < al.levels(); ++m) {
    LiouvilleCheck c;
    c.m = m;
    const BigRational diff = abs(alpha - al.convergent(m));
    c.lhs = diff * BigRational(boost::multiprecision::pow(BigInt(m), al.q[m - 1].convert_to<unsigned>()));
    c.lhs_upper = std::nextafter(c.lhs.convert_to<double>(), INFINITY);
    c.holds = c.lhs <= BigRational(1);
    out.push_back(c);
  }
  return out;
}

/// |p_m - alpha q_m| for alpha = the proxy, rounded upward.
inline double approximation_gap(const LiouvilleAlpha& al, int m) {
  const BigRational g = abs(BigRational(al.p.at(m - 1)) - al.proxy() * BigRational(al.q.at(m - 1)));
  return std::nextafter(g.convert_to<double>(), INFINITY);
}

/// Changes the period of a periodic measure by moving positions only: atom
/// weights and density values are kept.
inline PeriodicMeasure stretch_period(const PeriodicMeasure& P, double period) {
  const double f = period / P.period();
  std::vector<Atom> atoms;
  for (const auto& a : P.base().atoms()) atoms.push_back({std::min(a.x * f, std::nextafter(period, 0.0)), a.w});
  std::vector<Segment> segs;
  for (const auto& s : P.base().segments())
    segs.push_back({s.a * f, s.b == P.period() ? period : std::min(s.b * f, period), s.rho.scaled_arg(1.0 / f)});
  return {make_measure(std::move(atoms), std::move(segs), {0.0, period}), period};
}

struct QuasiperiodicMeasure {
  LocalMeasure mu;
  LocalMeasure mu2;
  PeriodicMeasure base2;
  BigRational alpha;
  double alpha_value = 0.0;
};

/// mu1 + mu2 on W, with mu1 of period one and mu2 stretched to the period alpha_M.
inline QuasiperiodicMeasure quasiperiodic_measure(const PeriodicMeasure& base1, const PeriodicMeasure& base2,
                                                  const LiouvilleAlpha& al, Window W,
                                                  std::size_t max_items = 5'000'000) {
  if (base1.period() != 1.0) throw DomainError("the first quasiperiodic component must have period 1");
  QuasiperiodicMeasure out;
  out.alpha = al.proxy();
  out.alpha_value = out.alpha.convert_to<double>();
  out.base2 = stretch_period(base2, out.alpha_value);
  out.mu2 = materialize(out.base2, W, max_items);
  out.mu = materialize(base1, W, max_items) + out.mu2;
  return out;
}

struct QuasiperiodicRow {
  int m = 0;
  double period = 0.0;  ///< p_m
  double gap = 0.0;     ///< |p_m - alpha q_m|
  SeminormResult defect;
  SeminormResult defect_mu2;
  double mu2_unif = 0.0;
  double bound = 0.0;  ///< 3 |p_m - alpha q_m| ||mu2||_unif
  [[nodiscard]] bool dominated(double slack = 1e-9) const { return defect.lower <= bound + slack; }
};

/// Translation defect of the quasiperiodic measure at the period p_m, on W = [-p_m, 2 p_m].
inline QuasiperiodicRow quasiperiodic_row(const PeriodicMeasure& base1, const PeriodicMeasure& base2,
                                          const LiouvilleAlpha& al, int m, double tol = 1e-9) {
  if (m < 1 || m > al.levels()) throw DomainError("level m is out of range for the stored convergents");
  QuasiperiodicRow row;
  row.m = m;
  row.period = al.p[m - 1].convert_to<double>();
  if (!(row.period > 0.0)) throw DomainError("convergent numerator p_m must be positive");
  row.gap = approximation_gap(al, m);
  const Window W{-row.period, 2.0 * row.period};
  const auto qp = quasiperiodic_measure(base1, base2, al, W);
  row.defect = translation_defect(qp.mu, row.period, tol);
  row.defect_mu2 = translation_defect(qp.mu2, row.period, tol);
  row.mu2_unif = norm_unif(qp.base2);
  row.bound = 3.0 * row.gap * row.mu2_unif;
  return row;
}

// ---------------------------------------------------------------------------
// Sharpness construction
// ---------------------------------------------------------------------------

/// l_m = K0 m (2(m-1) p_{m-1} + m).
struct LengthRule {
  double K0 = 24.0;
  [[nodiscard]] double operator()(int m, double p_prev) const {
    return K0 * m * (2.0 * (m - 1) * p_prev + m);
  }
};

/// Solution of u'' = u on [0, L] with u(0) = b, u(L) = c, written with
/// decaying exponentials only.
inline double interior_solution(double b, double c, double L, double t) {
  const double den = -std::expm1(-2.0 * L);
  return (b * (std::exp(-t) - std::exp(t - 2.0 * L)) + c * (std::exp(t - L) - std::exp(-t - L))) / den;
}

inline double interior_derivative(double b, double c, double L, double t) {
  const double den = -std::expm1(-2.0 * L);
  return (-b * (std::exp(-t) + std::exp(t - 2.0 * L)) + c * (std::exp(t - L) + std::exp(-t - L))) / den;
}

/// mu({0}) - mu({L}) = (2 c/b - 2 b/c) / (e^L - e^{-L}).
inline double mass_difference(double b, double c, double L) {
  if (!(b > 0.0) || !(c > 0.0) || !(L > 0.0)) throw DomainError("mass_difference needs b, c, L > 0");
  return (2.0 * c / b - 2.0 * b / c) * std::exp(-L) / -std::expm1(-2.0 * L);
}

/// ln |mass_difference(b, c, L)| for c/b = 2^{-m}: ln(2^{m+1} - 2^{1-m}) - L - ln(1 - e^{-2L}).
inline double log_mass_difference(int m, double L) {
  return std::log(std::ldexp(1.0, m + 1) - std::ldexp(1.0, 1 - m)) - L - std::log1p(-std::exp(-2.0 * L));
}

struct SharpnessConstruction {
  int m_max = 0;
  LengthRule rule;
  std::vector<double> l;  ///< l[m], index 0 unused
  std::vector<double> p;  ///< p[m], p[0] = 0
  std::vector<double> s;  ///< s_m = (m-1) p_{m-1}
  std::vector<double> t;  ///< t_m = p_m - s_m
  std::vector<double> T;  ///< support points of level m_max, increasing
  std::vector<double> u;  ///< u on T
  std::vector<double> mass;
  /// Outer neighbours of T taken from level m_max + 1.
  double left_x = 0.0, left_u = 0.0, right_x = 0.0, right_u = 0.0;
  LocalMeasure measure;

  [[nodiscard]] double lk_ratio(int m) const { return (2.0 * (m - 1) * p[m - 1] + m * std::log(2.0)) / l[m]; }

  /// Closed-form u and u'(x+) at x inside [left_x, right_x).
  [[nodiscard]] std::pair<double, double> eval(double x) const {
    if (x < left_x || x >= right_x) throw DomainError("closed-form u is only available between the outer neighbours");
    auto it = std::upper_bound(T.begin(), T.end(), x);
    double x0, u0, x1, u1;
    if (it == T.begin()) {
      x0 = left_x, u0 = left_u, x1 = T.front(), u1 = u.front();
    } else if (it == T.end()) {
      x0 = T.back(), u0 = u.back(), x1 = right_x, u1 = right_u;
    } else {
      const auto i = static_cast<std::size_t>(it - T.begin());
      x0 = T[i - 1], u0 = u[i - 1], x1 = T[i], u1 = u[i];
    }
    const double L = x1 - x0, y = x - x0;
    return {interior_solution(u0, u1, L, y), interior_derivative(u0, u1, L, y)};
  }

  [[nodiscard]] double u_at(double x) const {
    auto it = std::lower_bound(T.begin(), T.end(), x);
    if (it != T.end() && *it == x) return u[static_cast<std::size_t>(it - T.begin())];
    return eval(x).first;
  }
  [[nodiscard]] double mass_at(double x) const {
    auto it = std::lower_bound(T.begin(), T.end(), x);
    if (it == T.end() || *it != x) throw DomainError("no support point at " + detail::fmt(x));
    return mass[static_cast<std::size_t>(it - T.begin())];
  }
};

namespace detail {

/// Level-m support with u values: u(j p_m + t) = 2^{-m|j|} u(t) on
/// {j p_m + t : |j| <= m, t in T_{m-1}} inside [-m p_m, m p_m].
inline std::map<double, double> next_level(const std::map<double, double>& prev, int m, double pm) {
  std::map<double, double> out;
  const double lim = m * pm;
  for (int j = -m; j <= m; ++j)
    for (const auto& [t, ut] : prev) {
      const double x = j * pm + t;
      if (std::abs(x) <= lim) out.emplace(x, std::ldexp(ut, -m * std::abs(j)));
    }
  return out;
}

}  // namespace detail

inline SharpnessConstruction sharpness_construction(int m_max, LengthRule rule = {}) {
  if (m_max < 2 || m_max > 5) throw ResourceError("sharpness construction supports 2 <= m_max <= 5");
  if (!(rule.K0 > 0.0)) throw DomainError("length rule factor must be positive");
  SharpnessConstruction S;
  S.m_max = m_max;
  S.rule = rule;
  S.l.assign(m_max + 2, 0.0);
  S.p.assign(m_max + 2, 0.0);
  S.s.assign(m_max + 2, 0.0);
  S.t.assign(m_max + 2, 0.0);
  std::map<double, double> level{{0.0, 1.0}};
  std::map<double, double> top;
  for (int m = 1; m <= m_max + 1; ++m) {
    S.l[m] = rule(m, S.p[m - 1]);
    S.p[m] = 2.0 * (m - 1) * S.p[m - 1] + S.l[m];
    S.s[m] = (m - 1) * S.p[m - 1];
    S.t[m] = S.p[m] - S.s[m];
    level = detail::next_level(level, m, S.p[m]);
    if (m == m_max) top = level;
    if (std::abs(m * S.p[m]) > 0x1p53) throw ResourceError("support positions exceed exact double range");
  }
  for (const auto& [x, ux] : top) {
    S.T.push_back(x);
    S.u.push_back(ux);
  }
  auto lo = level.find(S.T.front()), hi = level.find(S.T.back());
  S.left_x = std::prev(lo)->first;
  S.left_u = std::prev(lo)->second;
  S.right_x = std::next(hi)->first;
  S.right_u = std::next(hi)->second;

  // mass(x) = u'(x+)/u(x) - u'(x-)/u(x) from the neighbouring arcs.
  const std::size_t n = S.T.size();
  std::vector<double> xs{S.left_x}, us{S.left_u};
  xs.insert(xs.end(), S.T.begin(), S.T.end());
  us.insert(us.end(), S.u.begin(), S.u.end());
  xs.push_back(S.right_x);
  us.push_back(S.right_u);
  std::vector<Atom> atoms;
  for (std::size_t i = 1; i <= n; ++i) {
    const double Lr = xs[i + 1] - xs[i], Ll = xs[i] - xs[i - 1];
    const double g_start = interior_derivative(us[i], us[i + 1], Lr, 0.0) / us[i];
    const double g_end = interior_derivative(us[i - 1], us[i], Ll, Ll) / us[i];
    S.mass.push_back(g_start - g_end);
    atoms.push_back({xs[i], S.mass.back()});
  }
  const double half = m_max * S.p[m_max];
  S.measure = make_measure(std::move(atoms), {}, {-half, half});
  return S;
}

struct SharpnessRow {
  int m = 0;
  double l = 0.0, p = 0.0, s = 0.0, t = 0.0;
  double lk_ratio = 0.0;
  double u_s = 0.0, u_t = 0.0;
  double mass_diff = 0.0;          ///< mu({s_m}) - mu({t_m}) from the construction
  double mass_diff_formula = 0.0;  ///< closed form with b = u(s_m), c = u(t_m), L = l_m
  bool two_atom_configuration = false;
  SeminormResult seminorm_defect;  ///< measured on [-m p_m, (m-1) p_m]
  SeminormResult gordon_defect;    ///< measured on [-p_m, p_m]
  /// ln ||mu - mu(. + p_m)||_{[-p_m, p_m]}: the two-atom interchange value for
  /// m >= 2, the measured value for m = 1.
  double log_defect = 0.0;
  double defect = 0.0;
  double log_bound = 0.0;  ///< m ln 2 - l_m + ln 4
  double log_ratio = 0.0;  ///< C p_m + ln defect
  double log_rate = 0.0;   ///< -(1/p_m) ln defect
};

struct SharpnessReport {
  double C = 0.0;
  std::vector<SharpnessRow> rows;
  double C_mu = 0.0;
  double E_mu = 0.0;
  std::vector<std::pair<double, double>> r_profile;
  double residual_abs = 0.0;
  double residual_rel = 0.0;
  double residual_range = 0.0;  ///< residual grid covers [-range, range]
  std::vector<double> level_l2;  ///< integral of u^2 over [-m p_m, m p_m] minus the previous level
  double max_abs_mass = 0.0;
};

/// Largest one-step deviation between propagation over a grid step and the
/// closed form, restarting from the closed form at each grid point.
inline std::pair<double, double> eigen_residual(const SharpnessConstruction& S, double range, double step,
                                                unsigned threads = 1) {
  const auto grid = uniform_grid(-range, range, step);
  std::vector<double> abs_res(grid.size(), 0.0), rel_res(grid.size(), 0.0);
  parallel_for(grid.size() - 1, threads, [&](std::size_t i) {
    const auto [u0, du0] = S.eval(grid[i]);
    const auto [u1, du1] = S.eval(grid[i + 1]);
    const State st = transfer_matrix(S.measure, -1.0, grid[i], grid[i + 1]).m * State{u0, du0};
    const double r = std::max(std::abs(st.u - u1), std::abs(st.du - du1));
    abs_res[i] = r;
    const double scale = std::max(std::abs(u1), std::abs(du1));
    if (scale > std::numeric_limits<double>::min()) rel_res[i] = r / scale;
  });
  return {*std::max_element(abs_res.begin(), abs_res.end()), *std::max_element(rel_res.begin(), rel_res.end())};
}

/// Integral of u^2 over the arcs between consecutive support points inside [-h, h].
inline double l2_mass(const SharpnessConstruction& S, double h) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < S.T.size(); ++i) {
    if (S.T[i] < -h || S.T[i + 1] > h) continue;
    const double b = S.u[i], c = S.u[i + 1], L = S.T[i + 1] - S.T[i];
    const double e2 = -std::expm1(-2.0 * L), eL = std::exp(-L);
    const double al = (c - eL * b) / e2, be = (b - eL * c) / e2;
    sum += 0.5 * (al * al + be * be) * e2 + 2.0 * al * be * L * eL;
  }
  return sum;
}

/// Per-level certificates of the sharpness construction for the weight C.
inline SharpnessReport sharpness_report(const SharpnessConstruction& S, double C, double tol = 1e-9,
                                        double residual_step = 0.01, unsigned threads = 1) {
  if (!(C > 0.0 && C < 1.0)) throw DomainError("sharpness report needs 0 < C < 1");
  SharpnessReport rep;
  rep.C = C;
  rep.rows.resize(static_cast<std::size_t>(S.m_max));
  parallel_for(rep.rows.size(), threads, [&](std::size_t k) {
    const int m = static_cast<int>(k) + 1;
    SharpnessRow& r = rep.rows[k];
    r.m = m;
    r.l = S.l[m];
    r.p = S.p[m];
    r.s = S.s[m];
    r.t = S.t[m];
    r.lk_ratio = S.lk_ratio(m);
    r.u_s = S.u_at(r.s);
    r.u_t = S.u_at(r.t);
    r.mass_diff = S.mass_at(r.s) - S.mass_at(r.t);
    r.mass_diff_formula = mass_difference(r.u_s, r.u_t, r.l);
    // Outer neighbours at distance l_1 on both sides with a/b = d/c.
    const double l1 = S.l[1];
    if (m >= 2 && r.s - l1 >= S.left_x && r.t + l1 <= S.right_x) {
      const double a = S.u_at(r.s - l1), d = S.u_at(r.t + l1);
      r.two_atom_configuration = std::abs(a / r.u_s - d / r.u_t) <= 1e-12 * (a / r.u_s);
    }
    const double lo = -m * r.p, hi = (m - 1) * r.p;
    r.seminorm_defect = interval_seminorm(S.measure - translate(S.measure, r.p), lo, hi, tol);
    r.gordon_defect = translation_defect(S.measure, r.p, m == 1 ? std::min(tol, 1e-16) : tol);
    if (m >= 2) {
      r.log_defect = log_mass_difference(m, r.l);
    } else {
      r.log_defect = r.gordon_defect.upper > 0.0 ? std::log(r.gordon_defect.upper)
                                                 : -std::numeric_limits<double>::infinity();
    }
    r.defect = std::exp(r.log_defect);
    r.log_bound = std::log(4.0) + m * std::log(2.0) - r.l;
    r.log_ratio = C * r.p + r.log_defect;
    r.log_rate = -r.log_defect / r.p;
  });
  rep.C_mu = -std::numeric_limits<double>::infinity();
  const std::size_t first = rep.rows.size() > 3 ? rep.rows.size() - 3 : 0;
  for (std::size_t k = first; k < rep.rows.size(); ++k) rep.C_mu = std::max(rep.C_mu, rep.rows[k].log_rate);

  const double wlen = S.measure.window().length();
  std::vector<double> r_grid;
  for (int m = 1; m <= S.m_max; ++m)
    if (S.p[m] <= wlen) r_grid.push_back(S.p[m]);
  rep.r_profile.resize(r_grid.size());
  parallel_for(r_grid.size(), threads, [&](std::size_t i) { rep.r_profile[i] = {r_grid[i], norm_unif(S.measure, r_grid[i])}; });
  double inf_r = norm_unif(S.measure);
  for (auto [r, v] : rep.r_profile) inf_r = std::min(inf_r, v);
  rep.E_mu = rep.C_mu * rep.C_mu - inf_r;

  const double range = 2.0 * S.p[2];
  rep.residual_range = range;
  std::tie(rep.residual_abs, rep.residual_rel) = eigen_residual(S, range, residual_step, threads);

  double prev = 0.0;
  for (int m = 1; m <= S.m_max; ++m) {
    const double cur = l2_mass(S, m * S.p[m]);
    rep.level_l2.push_back(cur - prev);
    prev = cur;
  }
  for (double w : S.mass) rep.max_abs_mass = std::max(rep.max_abs_mass, std::abs(w));
  return rep;
}

/// Samples (t, u(t)) of the closed-form eigenfunction on [lo, hi].
inline std::vector<std::pair<double, double>> sharpness_trace(const SharpnessConstruction& S, double lo, double hi,
                                                              double step) {
  std::vector<std::pair<double, double>> out;
  for (double x : uniform_grid(lo, hi, step)) out.emplace_back(x, S.eval(x).first);
  return out;
}

}  // namespace wg
