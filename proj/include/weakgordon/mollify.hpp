#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "weakgordon/measure.hpp"

namespace wg {

/// Mollifier psi_n(x) = n (35/32) (1 - (n x)^2)^3 on (-1/n, 1/n), written as
/// a polynomial in s.
inline Poly mollifier_kernel(int n) {
  const double dn = n, c = dn * 35.0 / 32.0;
  const double n2 = dn * dn;
  return Poly({c, 0.0, -3.0 * c * n2, 0.0, 3.0 * c * n2 * n2, 0.0, -c * n2 * n2 * n2});
}

/// Even moments of psi_n: m[j] = integral of s^(2j) psi_n(s) ds.
inline double mollifier_moment(int n, int j) {
  const double k = 2.0 * j;
  const double v = (35.0 / 16.0) * (1.0 / (k + 1) - 3.0 / (k + 3) + 3.0 / (k + 5) - 1.0 / (k + 7));
  return v / std::pow(static_cast<double>(n), k);
}

namespace detail {

/// Integral of rho(y) K(x - y) over y in [lo(x), hi(x)], as a polynomial in
/// xi = x - o. rho is given in eta = y - o; each limit is either the
/// constant c or xi + c.
inline Poly convolve_piece(const Poly& rho, const Poly& kernel, bool lo_moves, double lo_c, bool hi_moves,
                           double hi_c) {
  const int dr = rho.degree(), dk = kernel.degree();
  std::vector<std::vector<double>> binom(dk + 1, std::vector<double>(dk + 1, 0.0));
  for (int j = 0; j <= dk; ++j) {
    binom[j][0] = 1.0;
    for (int i = 1; i <= j; ++i) binom[j][i] = binom[j - 1][i - 1] + (i <= j - 1 ? binom[j - 1][i] : 0.0);
  }
  // B[a][b]: coefficient of xi^a eta^b in rho(eta) K(xi - eta).
  std::vector<std::vector<cplx>> B(dk + 1, std::vector<cplx>(dr + dk + 1));
  for (int j = 0; j <= dk; ++j) {
    const cplx kj = kernel.coeff(j);
    if (kj == cplx{}) continue;
    for (int i = 0; i <= j; ++i) {
      const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
      for (int r = 0; r <= dr; ++r) B[j - i][i + r] += kj * binom[j][i] * sgn * rho.coeff(r);
    }
  }
  const Poly up = hi_moves ? Poly({hi_c, 1.0}) : Poly::constant(hi_c);
  const Poly lp = lo_moves ? Poly({lo_c, 1.0}) : Poly::constant(lo_c);
  Poly upow = up, lpow = lp, out;
  std::vector<Poly> diff;
  for (int b = 0; b <= dr + dk; ++b) {
    diff.push_back((upow - lpow) * cplx(1.0 / (b + 1)));
    upow = upow * up;
    lpow = lpow * lp;
  }
  std::vector<cplx> xi_pow;
  for (int a = 0; a <= dk; ++a) {
    Poly sum;
    for (int b = 0; b <= dr + dk; ++b)
      if (B[a][b] != cplx{}) sum += diff[b] * B[a][b];
    std::vector<cplx> shift(static_cast<std::size_t>(a) + 1);
    shift[a] = 1.0;
    out += sum * Poly(shift);
  }
  return out;
}

}  // namespace detail

/// psi_n * mu, returned on the window shrunk by 1/n on both sides, where it
/// is determined by mu alone.
inline LocalMeasure mollify(const LocalMeasure& mu, int n) {
  if (n < 1) throw DomainError("mollify needs n >= 1");
  const double d = 1.0 / n;
  const Window w{mu.window().lo + d, mu.window().hi - d};
  if (!(w.lo < w.hi)) throw DomainError("window is too short to mollify at this n");
  const Poly K = mollifier_kernel(n);
  std::vector<Segment> pieces;
  for (const auto& a : mu.atoms()) pieces.push_back({a.x - d, a.x + d, K.shifted(-d) * a.w});
  for (const auto& s : mu.segments()) {
    std::vector<double> bp{s.a - d, s.a + d, s.b - d, s.b + d};
    std::sort(bp.begin(), bp.end());
    for (std::size_t i = 0; i + 1 < 4; ++i) {
      const double r0 = bp[i], r1 = bp[i + 1];
      if (!(r0 < r1)) continue;
      const double xm = 0.5 * (r0 + r1);
      const bool lo_moves = xm - d >= s.a, hi_moves = xm + d <= s.b;
      const Poly rho = s.rho.shifted(r0 - s.a);
      if (lo_moves && hi_moves) {
        Poly f = rho;
        Poly der = rho;
        double fact = 1.0;
        for (int j = 1; 2 * j <= rho.degree(); ++j) {
          der = der.derivative().derivative();
          fact *= (2.0 * j - 1.0) * (2.0 * j);
          f += der * cplx(mollifier_moment(n, j) / fact);
        }
        pieces.push_back({r0, r1, f});
      } else {
        pieces.push_back({r0, r1,
                          detail::convolve_piece(rho, K, lo_moves, lo_moves ? -d : s.a - r0, hi_moves,
                                                 hi_moves ? d : s.b - r0)});
      }
    }
  }
  for (const auto& p : pieces)
    if (p.rho.degree() > kMaxDegree) throw RepresentationError("mollified density exceeds the degree cap");
  std::vector<Segment> clipped;
  for (const auto& p : detail::combine_segments(std::move(pieces))) {
    const double a = std::max(p.a, w.lo), b = std::min(p.b, w.hi);
    if (a < b) clipped.push_back({a, b, p.rho.shifted(a - p.a)});
  }
  return make_measure({}, std::move(clipped), w);
}

/// psi mu for a piecewise affine multiplier psi that vanishes outside its
/// knot range.
inline LocalMeasure multiply_lipschitz(const LocalMeasure& mu, const PiecewiseAffine& psi) {
  psi.validate();
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x, a.w * psi(a.x)});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) {
    for (std::size_t i = 0; i + 1 < psi.x.size(); ++i) {
      const double lo = std::max(s.a, psi.x[i]), hi = std::min(s.b, psi.x[i + 1]);
      if (!(lo < hi)) continue;
      const Poly f({psi(lo), psi.slope(i)});
      segs.push_back({lo, hi, s.rho.shifted(lo - s.a) * f});
    }
  }
  for (const auto& s : segs)
    if (s.rho.degree() > kMaxDegree) throw RepresentationError("product density exceeds the degree cap");
  return make_measure(std::move(atoms), std::move(segs), mu.window());
}

}  // namespace wg
