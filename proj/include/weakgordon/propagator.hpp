#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "weakgordon/measure.hpp"
#include "weakgordon/seminorm.hpp"

namespace wg {

/// 2x2 complex matrix [[a, b], [c, d]]; the first row acts on values, the
/// second on right derivatives.
struct Mat2 {
  cplx a{1.0}, b{}, c{}, d{1.0};

  static Mat2 identity() { return {}; }
  [[nodiscard]] cplx det() const { return a * d - b * c; }
  /// Inverse of a unimodular matrix.
  [[nodiscard]] Mat2 adjugate() const { return {d, -b, -c, a}; }
  [[nodiscard]] double frobenius() const {
    return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
  }
  friend Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
  friend Mat2 operator-(const Mat2& l, const Mat2& r) { return {l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d}; }
};

struct State {
  cplx u{};
  cplx du{};
};

inline State operator*(const Mat2& m, const State& s) { return {m.a * s.u + m.b * s.du, m.c * s.u + m.d * s.du}; }

struct TransferMatrix {
  Mat2 m;
  double s = 0.0;
  double t = 0.0;
  /// |det - 1| relative to the magnitude |ad| + |bc| of the cancelling products.
  double det_defect = 0.0;
};

struct JumpRecord {
  double x = 0.0;
  cplx w{};
  cplx jump{};
};

struct SolutionTrace {
  std::vector<double> grid;
  std::vector<cplx> u;
  std::vector<cplx> du;
  std::vector<JumpRecord> jumps;
};

namespace detail {

/// cosh(x) and sinh(x)/x as even functions of x2 = x^2.
inline std::pair<cplx, cplx> even_cosh_sinhc(cplx x2) {
  if (std::abs(x2) < 1e-4) {
    cplx c{1.0}, s{1.0}, term_c{1.0}, term_s{1.0};
    for (int k = 1; k <= 6; ++k) {
      term_c *= x2 / static_cast<double>((2 * k - 1) * (2 * k));
      term_s *= x2 / static_cast<double>((2 * k) * (2 * k + 1));
      c += term_c;
      s += term_s;
    }
    return {c, s};
  }
  const cplx x = std::sqrt(x2);
  return {std::cosh(x), std::sinh(x) / x};
}

/// Exact propagator of u'' = q u over length h for constant q.
inline Mat2 constant_piece(cplx q, double h) {
  const auto [C, Sc] = even_cosh_sinhc(q * h * h);
  const cplx S = Sc * h;
  return {C, S, q * S, C};
}

/// Fourth-order Magnus propagator of u'' = q(s) u over [0, len].
inline Mat2 magnus_piece(const Poly& q, double len, double tol) {
  const double qmax = q.abs_bound(len);
  const double step = std::pow(tol, 0.25) / std::max(1.0, std::sqrt(qmax));
  const auto n = static_cast<long long>(std::ceil(len / step));
  const double h = len / static_cast<double>(std::max(1LL, n));
  const double g1 = 0.5 - std::sqrt(3.0) / 6.0, g2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double kappa = std::sqrt(3.0) * h * h / 12.0;
  Mat2 m;
  for (long long i = 0; i < std::max(1LL, n); ++i) {
    const double s0 = static_cast<double>(i) * h;
    const cplx q1 = q(s0 + g1 * h), q2 = q(s0 + g2 * h);
    const cplx w00 = kappa * (q1 - q2), w01 = h, w10 = 0.5 * h * (q1 + q2);
    const auto [C, Sc] = even_cosh_sinhc(w00 * w00 + w01 * w10);
    const Mat2 e{C + Sc * w00, Sc * w01, Sc * w10, C - Sc * w00};
    m = e * m;
  }
  return m;
}

inline void require_path(const LocalMeasure& mu, double s, double t) {
  if (std::min(s, t) < mu.window().lo || std::max(s, t) > mu.window().hi)
    throw DomainError("propagation path [" + fmt(std::min(s, t)) + ", " + fmt(std::max(s, t)) +
                      "] leaves the measure window");
}

/// Forward product over (s, t] for s <= t.
inline Mat2 forward_product(const LocalMeasure& mu, cplx z, double s, double t, double tol) {
  Mat2 m;
  auto ai = mu.first_atom_after(s);
  auto si = mu.first_segment_ending_after(s);
  const auto ae = mu.atoms().end();
  const auto se = mu.segments().end();
  double pos = s;
  while (pos < t) {
    double e = t;
    if (ai != ae && ai->x < e) e = ai->x;
    if (si != se) e = std::min(e, si->a > pos ? si->a : si->b);
    if (e > pos) {
      const double h = e - pos;
      if (si != se && si->a <= pos && pos < si->b) {
        const Poly q = si->rho.shifted(pos - si->a) - Poly::constant(z);
        m = (q.is_constant() ? constant_piece(q.coeff(0), h) : magnus_piece(q, h, tol)) * m;
      } else {
        m = constant_piece(-z, h) * m;
      }
    }
    pos = e;
    while (ai != ae && ai->x <= pos) {
      m = Mat2{1.0, 0.0, ai->w, 1.0} * m;
      ++ai;
    }
    while (si != se && si->b <= pos) ++si;
  }
  return m;
}

inline double det_defect(const Mat2& m) {
  const double scale = std::max(1.0, std::abs(m.a * m.d) + std::abs(m.b * m.c));
  return std::abs(m.det() - 1.0) / scale;
}

}  // namespace detail

/// T_mu(t, s): maps (u(s), u'(s+)) to (u(t), u'(t+)) for -u'' + mu u = z u.
inline TransferMatrix transfer_matrix(const LocalMeasure& mu, cplx z, double s, double t, double tol = 1e-12) {
  if (!(tol > 0.0)) throw DomainError("transfer_matrix needs tol > 0");
  detail::require_path(mu, s, t);
  TransferMatrix tm;
  tm.s = s;
  tm.t = t;
  if (s <= t)
    tm.m = detail::forward_product(mu, z, s, t, tol);
  else
    tm.m = detail::forward_product(mu, z, t, s, tol).adjugate();
  tm.det_defect = detail::det_defect(tm.m);
  return tm;
}

/// Columns of T(t, s): (u_N(t,s), d1 u_N(t+,s), u_D(t,s), d1 u_D(t+,s)).
struct DirichletNeumann {
  cplx uN, duN, uD, duD;
};

inline DirichletNeumann dirichlet_neumann(const LocalMeasure& mu, cplx z, double s, double t, double tol = 1e-12) {
  const Mat2 m = transfer_matrix(mu, z, s, t, tol).m;
  return {m.a, m.c, m.b, m.d};
}

/// Relative defect of T(t,r) = T(t,s) T(s,r), scaled by |T(t,s)| |T(s,r)|.
inline double composition_defect(const LocalMeasure& mu, cplx z, double r, double s, double t, double tol = 1e-12) {
  const Mat2 tr = transfer_matrix(mu, z, r, t, tol).m;
  const Mat2 ts = transfer_matrix(mu, z, s, t, tol).m;
  const Mat2 sr = transfer_matrix(mu, z, r, s, tol).m;
  return (tr - ts * sr).frobenius() / std::max(1.0, ts.frobenius() * sr.frobenius());
}

/// Samples the solution with u(s) = u0, u'(s+) = du0 on an increasing grid.
inline SolutionTrace propagate(const LocalMeasure& mu, cplx z, double s, State init, const std::vector<double>& grid,
                               double tol = 1e-12) {
  if (grid.empty()) throw DomainError("propagate needs a nonempty grid");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i + 1] > grid[i])) throw DomainError("propagation grid must be strictly increasing");
  detail::require_path(mu, std::min(s, grid.front()), std::max(s, grid.back()));
  SolutionTrace tr;
  tr.grid = grid;
  tr.u.resize(grid.size());
  tr.du.resize(grid.size());
  const auto first_up = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), s) - grid.begin());
  State st = init;
  double pos = s;
  for (std::size_t i = first_up; i < grid.size(); ++i) {
    st = transfer_matrix(mu, z, pos, grid[i], tol).m * st;
    pos = grid[i];
    tr.u[i] = st.u;
    tr.du[i] = st.du;
  }
  st = init;
  pos = s;
  for (std::size_t i = first_up; i-- > 0;) {
    st = transfer_matrix(mu, z, pos, grid[i], tol).m * st;
    pos = grid[i];
    tr.u[i] = st.u;
    tr.du[i] = st.du;
  }
  const double lo = std::min(s, grid.front()), hi = std::max(s, grid.back());
  for (auto it = mu.first_atom_after(lo); it != mu.atoms().end() && it->x <= hi; ++it) {
    const State at = transfer_matrix(mu, z, s, it->x, tol).m * init;
    tr.jumps.push_back({it->x, it->w, it->w * at.u});
  }
  return tr;
}

/// Evenly spaced grid a, a + step, ..., up to b.
inline std::vector<double> uniform_grid(double a, double b, double step) {
  if (!(step > 0.0) || !(b >= a)) throw DomainError("grid needs a <= b and step > 0");
  std::vector<double> g;
  const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) g.push_back(a + static_cast<double>(i) * step);
  if (b - g.back() > 1e-9 * step) g.push_back(b);
  return g;
}

/// The potential mu - z lambda on the window of mu.
inline LocalMeasure effective_potential(const LocalMeasure& mu, cplx z) {
  return mu + (-z) * lebesgue(mu.window());
}

/// Growth bound (|u0| + |du0|) e^{omega(|t| + 1)} with omega = ||mu - z lambda||_unif + 1.
inline double gronwall_bound(const LocalMeasure& mu, cplx z, double t, double initial_norm) {
  const double omega = norm_unif(effective_potential(mu, z)) + 1.0;
  return initial_norm * std::exp(omega * (std::abs(t) + 1.0));
}

/// Bound on (w^2 |u(t)|^2 + |u'(t+)|^2)^{1/2} with w = ||mu - z lambda||_unif^{1/2}.
inline double sharp_growth_bound(const LocalMeasure& mu, cplx z, double t, cplx u0, cplx du0) {
  const double nu = norm_unif(effective_potential(mu, z));
  if (nu == 0.0) throw DomainError("sharp growth bound needs a nonzero potential; solutions are affine");
  const double w = std::sqrt(nu);
  return std::sqrt(nu * std::norm(u0) + std::norm(du0)) * std::exp(w * (std::abs(t) + 0.5));
}

struct DerivativeChain {
  double l2_du = 0.0;
  double sup_du = 0.0;
  double M = 0.0;
  double sup_u = 0.0;
  double l2_u = 0.0;
  [[nodiscard]] bool holds(double slack = 1e-9) const {
    return l2_du <= sup_du * (1.0 + slack) + slack && sup_du <= M * sup_u * (1.0 + slack) + slack &&
           M * sup_u <= std::sqrt(3.0) * std::pow(M, 1.5) * l2_u * (1.0 + slack) + slack;
  }
};

/// The chain ||u'||_2 <= ||u'||_inf <= M ||u||_inf <= sqrt(3) M^{3/2} ||u||_2 on
/// the unit interval [k, k + 1], M = ||mu - z lambda||_unif + 2, with the
/// solution resampled on a fine grid that includes every atom.
inline DerivativeChain derivative_sup_bound(const LocalMeasure& mu, cplx z, double s, State init, double k,
                                            int samples = 4000) {
  std::vector<double> grid = uniform_grid(k, k + 1.0, 1.0 / samples);
  for (auto it = mu.first_atom_after(k); it != mu.atoms().end() && it->x < k + 1.0; ++it) grid.push_back(it->x);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto tr = propagate(mu, z, s, init, grid);
  DerivativeChain ch;
  ch.M = norm_unif(effective_potential(mu, z)) + 2.0;
  double iu = 0.0, idu = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ch.sup_u = std::max(ch.sup_u, std::abs(tr.u[i]));
    ch.sup_du = std::max(ch.sup_du, std::abs(tr.du[i]));
    const cplx w = mu.atom_at(grid[i]);
    if (w != cplx{} && grid[i] > k) ch.sup_du = std::max(ch.sup_du, std::abs(tr.du[i] - w * tr.u[i]));
    if (i + 1 < grid.size()) {
      const double h = grid[i + 1] - grid[i];
      iu += 0.5 * h * (std::norm(tr.u[i]) + std::norm(tr.u[i + 1]));
      const cplx du_next_left = tr.du[i + 1] - mu.atom_at(grid[i + 1]) * tr.u[i + 1];
      idu += 0.5 * h * (std::norm(tr.du[i]) + std::norm(du_next_left));
    }
  }
  ch.l2_u = std::sqrt(iu);
  ch.l2_du = std::sqrt(idu);
  return ch;
}

/// Stability constant C = C0 * sum_k 2k e^{-omega(k-1)} with C0 = 1 + (||mu2||_unif + 2)/omega.
inline double stability_constant(double omega, double mu2_unif) {
  const double c0 = 1.0 + (mu2_unif + 2.0) / omega;
  const double q = std::exp(-omega);
  return c0 * 2.0 / ((1.0 - q) * (1.0 - q));
}

struct StabilityBound {
  double C = 0.0;
  double c = 0.0;
  double omega = 0.0;
  double u2_sup = 0.0;
  double nu_seminorm = 0.0;
  [[nodiscard]] double operator()(double t) const { return C * c * std::exp(omega * std::abs(t)) * u2_sup * nu_seminorm; }
};

/// Dominating function for |u1 - u2| on [alpha, beta] under the matched
/// initial condition, with the default pair omega = ||mu1||_unif + 1, c = e^omega.
inline StabilityBound stability_bound(const LocalMeasure& mu1, const LocalMeasure& mu2, cplx z, int alpha, int beta,
                                      double u2_sup, std::optional<double> c = {}, std::optional<double> omega = {},
                                      double tol = 1e-9) {
  if (alpha > -1 || beta < 1) throw DomainError("stability bound needs integers alpha <= -1 and beta >= 1");
  const LocalMeasure e1 = effective_potential(mu1, z), e2 = effective_potential(mu2, z);
  StabilityBound b;
  b.omega = omega.value_or(norm_unif(e1) + 1.0);
  b.c = c.value_or(std::exp(b.omega));
  b.C = stability_constant(b.omega, norm_unif(e2));
  b.u2_sup = u2_sup;
  b.nu_seminorm = interval_seminorm(mu1 - mu2, alpha, beta, tol).upper;
  return b;
}

struct SolutionDifference {
  State u2_initial;
  cplx c{};
  std::vector<double> grid;
  std::vector<cplx> direct;
  std::vector<cplx> reconstructed;
};

namespace detail {

inline const std::array<std::pair<double, double>, 8>& gauss_legendre8() {
  static const std::array<std::pair<double, double>, 8> nodes{{
      {-0.9602898564975363, 0.1012285362903763},
      {-0.7966664774136267, 0.2223810344533745},
      {-0.5255324099163290, 0.3137066458778873},
      {-0.1834346424956498, 0.3626837833783620},
      {0.1834346424956498, 0.3626837833783620},
      {0.5255324099163290, 0.3137066458778873},
      {0.7966664774136267, 0.2223810344533745},
      {0.9602898564975363, 0.1012285362903763},
  }};
  return nodes;
}

/// Breakpoints of the measures strictly between lo and hi, plus both ends.
inline std::vector<double> breakpoints(std::initializer_list<const LocalMeasure*> ms, double lo, double hi) {
  std::vector<double> bp{lo, hi};
  for (const auto* m : ms) {
    for (const auto& a : m->atoms())
      if (a.x > lo && a.x < hi) bp.push_back(a.x);
    for (const auto& s : m->segments())
      for (double e : {s.a, s.b})
        if (e > lo && e < hi) bp.push_back(e);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

/// Composite Gauss-Legendre quadrature nodes on [lo, hi] with `per` panels
/// between consecutive breakpoints.
inline std::vector<std::pair<double, double>> quadrature_nodes(const std::vector<double>& bp, int per) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double h = (bp[i + 1] - bp[i]) / per;
    for (int p = 0; p < per; ++p) {
      const double a = bp[i] + p * h, m = a + 0.5 * h;
      for (auto [x, w] : gauss_legendre8()) out.emplace_back(m + 0.5 * h * x, 0.5 * h * w);
    }
  }
  return out;
}

}  // namespace detail

/// Integral of d/ds(u_D(t,s) u2(s)) (c - phi_nu(s)) over s in [0, t], with
/// d/ds u_D(t,s) = -u_N(t,s). The row (u_N(t,s), u_D(t,s)) of T(t,s) is
/// carried from s = t towards 0 one node at a time.
inline cplx variation_of_constants(const LocalMeasure& mu1, const LocalMeasure& mu2, cplx z, State u2_0, cplx c,
                                   double t, double tol = 1e-8) {
  if (t == 0.0) return {};
  const LocalMeasure nu = mu1 - mu2;
  const double lo = std::min(0.0, t), hi = std::max(0.0, t);
  const auto bp = detail::breakpoints({&mu1, &mu2}, lo, hi);
  auto integrate = [&](int per) {
    auto nodes = detail::quadrature_nodes(bp, per);
    if (t < 0.0) std::reverse(nodes.begin(), nodes.end());
    std::vector<State> u2(nodes.size());
    double pos = 0.0;
    State st = u2_0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      st = transfer_matrix(mu2, z, pos, nodes[i].first).m * st;
      pos = nodes[i].first;
      u2[i] = st;
    }
    cplx rowN{1.0}, rowD{};
    double rpos = t;
    cplx sum{};
    for (std::size_t i = nodes.size(); i-- > 0;) {
      const double s = nodes[i].first;
      const Mat2 m = transfer_matrix(mu1, z, s, rpos).m;
      const cplx nN = rowN * m.a + rowD * m.c, nD = rowN * m.b + rowD * m.d;
      rowN = nN;
      rowD = nD;
      rpos = s;
      const cplx deriv = -rowN * u2[i].u + rowD * u2[i].du;
      sum += nodes[i].second * deriv * (c - nu.signed_mass(s));
    }
    return t > 0.0 ? sum : -sum;
  };
  cplx prev = integrate(1);
  for (int per = 2; per <= 256; per *= 2) {
    const cplx cur = integrate(per);
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw ToleranceError("variation-of-constants quadrature did not converge");
}

/// v(t) from the identity (v, v')(t) = T_mu1(t,s)(v, v')(s) + int_s^t T_mu1(t,r)(0, u2(r)) dnu(r),
/// first component only.
inline cplx variation_from(const LocalMeasure& mu1, const LocalMeasure& mu2, cplx z, double s, State v_s, State u2_s,
                           double t, double tol = 1e-8) {
  const LocalMeasure nu = mu1 - mu2;
  const cplx head = (transfer_matrix(mu1, z, s, t).m * v_s).u;
  if (s == t) return head;
  const double lo = std::min(s, t), hi = std::max(s, t);
  const double sign = t > s ? 1.0 : -1.0;
  auto uD_u2 = [&](double r) {
    const State u2 = transfer_matrix(mu2, z, s, r).m * u2_s;
    return transfer_matrix(mu1, z, r, t).m.b * u2.u;
  };
  cplx atoms{};
  for (auto it = nu.first_atom_after(lo); it != nu.atoms().end() && it->x <= hi; ++it) atoms += it->w * uD_u2(it->x);
  const auto bp = detail::breakpoints({&mu1, &mu2}, lo, hi);
  auto dens = [&](int per) {
    cplx sum{};
    for (auto [r, w] : detail::quadrature_nodes(bp, per)) {
      const cplx rho = nu.density(r);
      if (rho != cplx{}) sum += w * rho * uD_u2(r);
    }
    return sum;
  };
  cplx prev = dens(1);
  for (int per = 2; per <= 256; per *= 2) {
    const cplx cur = dens(per);
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return head + sign * (atoms + cur);
    prev = cur;
  }
  throw ToleranceError("variation-from quadrature did not converge");
}

/// Builds u2 with u2(0) = u1(0), u2'(0+) = u1'(0+) + c_{nu,0} u1(0) and
/// compares v = u1 - u2 on the grid with its variation-of-constants form.
inline SolutionDifference solution_difference(const LocalMeasure& mu1, const LocalMeasure& mu2, cplx z,
                                              State u1_initial, const std::vector<double>& grid, double tol = 1e-8) {
  SolutionDifference out;
  const LocalMeasure nu = mu1 - mu2;
  out.c = window_seminorm(nu, 0.0).minimizer_c;
  out.u2_initial = {u1_initial.u, u1_initial.du + out.c * u1_initial.u};
  out.grid = grid;
  const auto t1 = propagate(mu1, z, 0.0, u1_initial, grid);
  const auto t2 = propagate(mu2, z, 0.0, out.u2_initial, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.direct.push_back(t1.u[i] - t2.u[i]);
    out.reconstructed.push_back(variation_of_constants(mu1, mu2, z, out.u2_initial, out.c, grid[i], tol));
  }
  return out;
}

}  // namespace wg
