#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "weakgordon/measure.hpp"

namespace wg {

struct SeminormCertificate {
  double grid_step = 0.0;    ///< smallest node width used by the refinement
  double lipschitz = 0.0;    ///< total variation of mu on I, a Lipschitz constant of a -> N(a)
  double error_bound = 0.0;  ///< guaranteed bound on upper - sup_a N(a)
};

struct SeminormResult {
  double lower = 0.0;
  double upper = 0.0;
  cplx minimizer_c{};        ///< constant c in the phi_mu frame at the witness window
  double witness_a = 0.0;    ///< centre of the witness window
  double witness_half = 1.0; ///< half length of the witness window
  SeminormCertificate certificate;
  std::size_t evaluations = 0;
};

namespace detail {

/// Piece of the primitive psi(t) = mu((x0, t]) on [t0, t1], in s = t - t0.
struct PrimPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  Poly p;
};

inline std::vector<PrimPiece> primitive(const LocalMeasure& mu, double x0, double x1) {
  std::vector<PrimPiece> out;
  auto ai = mu.first_atom_after(x0);
  auto si = mu.first_segment_ending_after(x0);
  const auto ae = mu.atoms().end();
  const auto se = mu.segments().end();
  double pos = x0;
  cplx v{};
  while (pos < x1) {
    double e = x1;
    if (ai != ae && ai->x < e) e = ai->x;
    if (si != se) e = std::min(e, si->a > pos ? si->a : si->b);
    Poly dens;
    if (si != se && si->a <= pos && pos < si->b) dens = si->rho.shifted(pos - si->a);
    if (e > pos) {
      Poly p = dens.antiderivative() + Poly::constant(v);
      v = p(e - pos);
      out.push_back({pos, e, std::move(p)});
    }
    pos = e;
    while (ai != ae && ai->x <= pos) {
      if (ai->x < x1) v += ai->w;
      ++ai;
    }
    while (si != se && si->b <= pos) ++si;
  }
  return out;
}

/// Real primitive on a window split into monotone parts, supporting the
/// level-set measures and deviation integrals used by the median search.
class RealWindow {
 public:
  explicit RealWindow(const std::vector<PrimPiece>& pieces, bool imag = false) {
    for (const auto& pc : pieces) {
      Part base;
      const Poly q = imag ? pc.p.imag_part() : pc.p.real_part();
      base.c = real_coeffs(q);
      if (base.c.empty()) base.c.push_back(0.0);
      base.dc = detail::derivative(base.c);
      base.anti = real_coeffs(q.antiderivative());
      const double len = pc.t1 - pc.t0;
      length_ += len;
      std::vector<double> knots{0.0};
      if (base.c.size() > 2)
        for (double r : real_roots(base.dc, 0.0, len)) knots.push_back(r);
      knots.push_back(len);
      if (base.c.size() > 1) all_constant_ = false;
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        Part part = base;
        part.s0 = knots[k];
        part.s1 = knots[k + 1];
        part.v0 = horner(part.c, part.s0);
        part.v1 = horner(part.c, part.s1);
        lo_ = std::min({lo_, part.v0, part.v1});
        hi_ = std::max({hi_, part.v0, part.v1});
        parts_.push_back(std::move(part));
      }
    }
  }

  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] double min_value() const { return lo_; }
  [[nodiscard]] double max_value() const { return hi_; }
  [[nodiscard]] bool all_constant() const { return all_constant_; }

  /// |{psi <= c}| (strict = false) or |{psi < c}| (strict = true).
  [[nodiscard]] double below(double c, bool strict = false) const {
    double r = 0.0;
    for (const auto& p : parts_) {
      const double len = p.s1 - p.s0;
      if (p.c.size() == 1) {
        if (strict ? p.v0 < c : p.v0 <= c) r += len;
        continue;
      }
      const double vmin = std::min(p.v0, p.v1), vmax = std::max(p.v0, p.v1);
      if (vmax <= c) {
        r += len;
      } else if (vmin < c) {
        const double root = crossing(p, c);
        r += (p.v0 < p.v1) ? root - p.s0 : p.s1 - root;
      }
    }
    return r;
  }

  [[nodiscard]] double above(double c) const { return length_ - below(c, true); }

  /// Integral of |psi - c| over the window.
  [[nodiscard]] double deviation(double c) const {
    double r = 0.0;
    for (const auto& p : parts_) {
      const double len = p.s1 - p.s0;
      if (p.c.size() == 1) {
        r += std::abs(p.v0 - c) * len;
        continue;
      }
      auto integ = [&](double a, double b) { return horner(p.anti, b) - horner(p.anti, a) - c * (b - a); };
      const double vmin = std::min(p.v0, p.v1), vmax = std::max(p.v0, p.v1);
      if (vmin >= c) {
        r += integ(p.s0, p.s1);
      } else if (vmax <= c) {
        r -= integ(p.s0, p.s1);
      } else {
        const double root = crossing(p, c);
        r += std::abs(integ(p.s0, root)) + std::abs(integ(root, p.s1));
      }
    }
    return r;
  }

  /// Smallest c with |{psi <= c}| >= L/2.
  [[nodiscard]] double smallest_median() const {
    const double target = half_target();
    if (all_constant_) {
      auto v = constants();
      std::sort(v.begin(), v.end());
      double acc = 0.0;
      for (auto [val, len] : v) {
        acc += len;
        if (acc >= target) return val;
      }
      return v.back().first;
    }
    double lo = lo_, hi = hi_;
    if (below(lo) >= target) return lo;
    for (int it = 0; it < 200; ++it) {
      const double m = lo + 0.5 * (hi - lo);
      if (m <= lo || m >= hi) break;
      (below(m) >= target ? hi : lo) = m;
    }
    return hi;
  }

  /// Largest c with |{psi >= c}| >= L/2.
  [[nodiscard]] double largest_median() const {
    const double target = half_target();
    if (all_constant_) {
      auto v = constants();
      std::sort(v.begin(), v.end(), [](auto& l, auto& r) { return l.first > r.first; });
      double acc = 0.0;
      for (auto [val, len] : v) {
        acc += len;
        if (acc >= target) return val;
      }
      return v.back().first;
    }
    double lo = lo_, hi = hi_;
    if (above(hi) >= target) return hi;
    for (int it = 0; it < 200; ++it) {
      const double m = lo + 0.5 * (hi - lo);
      if (m <= lo || m >= hi) break;
      (above(m) >= target ? lo : hi) = m;
    }
    return lo;
  }

  [[nodiscard]] bool is_median(double c) const {
    const double target = half_target();
    return below(c) >= target && above(c) >= target;
  }

  /// Lebesgue median of least distance to `prefer`.
  [[nodiscard]] double median_near(double prefer) const {
    const double c_lo = smallest_median();
    if (prefer <= c_lo) return c_lo;
    if (is_median(prefer)) return prefer;
    return std::max(c_lo, largest_median());
  }

 private:
  struct Part {
    std::vector<double> c, dc, anti;
    double s0 = 0.0, s1 = 0.0, v0 = 0.0, v1 = 0.0;
  };

  [[nodiscard]] double half_target() const { return 0.5 * length_ * (1.0 - 8.0 * std::numeric_limits<double>::epsilon()); }

  [[nodiscard]] std::vector<std::pair<double, double>> constants() const {
    std::vector<std::pair<double, double>> v;
    for (const auto& p : parts_) v.emplace_back(p.v0, p.s1 - p.s0);
    return v;
  }

  static double crossing(const Part& p, double c) {
    std::vector<double> q = p.c;
    q[0] -= c;
    return monotone_root(q, p.dc, p.s0, p.s1, p.v0 - c);
  }

  std::vector<Part> parts_;
  double length_ = 0.0;
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
  bool all_constant_ = true;
};

/// Value of psi just left of t (left = true) or at t, from primitive pieces.
inline cplx piece_value(const std::vector<PrimPiece>& pieces, double t, bool left) {
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& pc = pieces[i];
    if (left ? (t > pc.t0 && t <= pc.t1) : (t >= pc.t0 && t < pc.t1)) return pc.p(t - pc.t0);
  }
  return pieces.empty() ? cplx{} : pieces.back().p(pieces.back().t1 - pieces.back().t0);
}

/// Integral of psi - c over [a, b] within the window.
inline cplx signed_integral(const std::vector<PrimPiece>& pieces, double a, double b, cplx c) {
  cplx r{};
  for (const auto& pc : pieces) {
    const double lo = std::max(a, pc.t0), hi = std::min(b, pc.t1);
    if (lo < hi) r += pc.p.integral(lo - pc.t0, hi - pc.t0) - c * (hi - lo);
  }
  return r;
}

/// Integral of |s*beta + alpha - c| over [0, len] in closed form.
inline double linear_abs_integral(cplx alpha, cplx beta, double len) {
  const cplx s = (-alpha) / beta;
  const double x = s.real(), y = std::abs(s.imag());
  auto F = [y](double u) {
    if (y == 0.0) return 0.5 * u * std::abs(u);
    return 0.5 * (u * std::hypot(u, y) + y * y * std::asinh(u / y));
  };
  return std::abs(beta) * (F(len - x) - F(-x));
}

inline double complex_deviation(const std::vector<PrimPiece>& pieces, cplx c) {
  double r = 0.0;
  for (const auto& pc : pieces) {
    const double len = pc.t1 - pc.t0;
    if (pc.p.degree() <= 0) {
      r += std::abs(pc.p.coeff(0) - c) * len;
    } else if (pc.p.degree() == 1) {
      r += linear_abs_integral(pc.p.coeff(0) - c, pc.p.coeff(1), len);
    } else {
      r += abs_integral(pc.p - Poly::constant(c), 0.0, len);
    }
  }
  return r;
}

template <class F>
double golden_min(F&& f, double a, double b, double tol, double* arg) {
  constexpr double g = 0.6180339887498949;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  *arg = f1 <= f2 ? x1 : x2;
  return std::min(f1, f2);
}

/// Evaluation of one window (x0, x1]: upper and lower bounds of the window
/// seminorm and the constant c in the psi frame anchored at x0.
struct WindowEval {
  double upper = 0.0;
  double lower = 0.0;
  cplx c{};
};

inline WindowEval eval_real(const LocalMeasure& mu, const std::vector<PrimPiece>& pieces, double x0, double x1,
                            double prefer) {
  WindowEval out;
  if (pieces.empty()) return out;
  if (mu.sign_class() != 0) {
    const double mid = 0.5 * (x0 + x1);
    const double vl = piece_value(pieces, mid, true).real(), vr = piece_value(pieces, mid, false).real();
    const double c_lo = std::min(vl, vr), c_hi = std::max(vl, vr);
    const double c = std::clamp(prefer, c_lo, c_hi);
    const double sgn = mu.sign_class() > 0 ? 1.0 : -1.0;
    const double v = sgn * (signed_integral(pieces, mid, x1, c).real() - signed_integral(pieces, x0, mid, c).real());
    out.upper = out.lower = std::max(v, 0.0);
    out.c = c;
    return out;
  }
  const RealWindow rw(pieces);
  const double c = rw.median_near(prefer);
  out.upper = out.lower = rw.deviation(c);
  out.c = c;
  return out;
}

inline WindowEval eval_window(const LocalMeasure& mu, double x0, double x1) {
  const auto pieces = primitive(mu, x0, x1);
  const cplx prefer = -mu.signed_mass(x0);
  if (mu.is_real()) return eval_real(mu, pieces, x0, x1, prefer.real());
  const RealWindow re(pieces, false), im(pieces, true);
  const double n_re = re.deviation(re.median_near(prefer.real()));
  const double n_im = im.deviation(im.median_near(prefer.imag()));
  const cplx c_comp(re.median_near(prefer.real()), im.median_near(prefer.imag()));
  double best = complex_deviation(pieces, c_comp);
  cplx best_c = c_comp;
  const double span = std::max({re.max_value() - re.min_value(), im.max_value() - im.min_value(), 1e-300});
  const double tol = 1e-10 * span;
  if (re.max_value() > re.min_value() || im.max_value() > im.min_value()) {
    double y_at = 0.0;
    auto inner = [&](double x) {
      double y = 0.0;
      const double v = golden_min([&](double yy) { return complex_deviation(pieces, cplx(x, yy)); },
                                  im.min_value(), im.max_value() + tol, tol, &y);
      y_at = y;
      return v;
    };
    double x_best = 0.0;
    golden_min(inner, re.min_value(), re.max_value() + tol, tol, &x_best);
    inner(x_best);
    const cplx c_gs(x_best, y_at);
    const double v = complex_deviation(pieces, c_gs);
    if (v < best) {
      best = v;
      best_c = c_gs;
    }
  }
  return {best, std::max({n_re, n_im, 0.5 * best}), best_c};
}

inline void require_inside(const LocalMeasure& mu, double lo, double hi) {
  if (!(lo <= hi) || lo < mu.window().lo || hi > mu.window().hi)
    throw DomainError("interval [" + fmt(lo) + ", " + fmt(hi) + "] is not contained in the measure window [" +
                      fmt(mu.window().lo) + ", " + fmt(mu.window().hi) + "]");
}

/// Range of |psi - c| over the open interval (t0, t1), psi anchored at x0,
/// assuming mu has no atoms and a single density piece inside.
inline std::pair<double, double> deviation_range(const LocalMeasure& mu, double x0, double t0, double t1, cplx c) {
  const double tc = 0.5 * (t0 + t1), hw = 0.5 * (t1 - t0);
  const cplx v = (tc >= x0 ? mu.mass(x0, tc) : -mu.mass(tc, x0)) - c;
  const auto it = mu.first_segment_ending_after(tc);
  double rad = 0.0;
  if (it != mu.segments().end() && it->a <= tc) rad = it->rho.shifted(tc - it->a).abs_bound(hw) * hw;
  const double centre = std::abs(v);
  return {std::max(0.0, centre - rad), centre + rad};
}

}  // namespace detail

/// Seminorm of the single window (x0, x1).
inline SeminormResult window_value(const LocalMeasure& mu, double x0, double x1) {
  detail::require_inside(mu, x0, x1);
  const auto ev = detail::eval_window(mu, x0, x1);
  SeminormResult r;
  r.lower = ev.lower;
  r.upper = ev.upper;
  r.minimizer_c = ev.c + mu.signed_mass(x0);
  r.witness_a = 0.5 * (x0 + x1);
  r.witness_half = 0.5 * (x1 - x0);
  r.certificate.lipschitz = total_variation(mu, x0, x1);
  r.evaluations = 1;
  return r;
}

/// ||mu||_{[a-1, a+1]}.
inline SeminormResult window_seminorm(const LocalMeasure& mu, double a) { return window_value(mu, a - 1.0, a + 1.0); }

/// Certified supremum of the window seminorm over all windows of length
/// min(2, |I|) inside I = [lo, hi], by branch and bound over the window
/// centre. Between structural breakpoints the bound on a node J uses
/// N(a) <= N(mid) + |a - mid| sup_J |D| with D(a) the derivative of the
/// window integral at the constant fixed at the midpoint.
inline SeminormResult interval_seminorm(const LocalMeasure& mu, double lo, double hi, double tol = 1e-9,
                                        std::size_t max_nodes = 4'000'000) {
  if (!(tol > 0.0)) throw DomainError("interval_seminorm needs tol > 0");
  detail::require_inside(mu, lo, hi);
  const double len = hi - lo;
  const double h = std::min(1.0, 0.5 * len);
  const double amin = lo + h, amax = hi - h;
  SeminormResult best;
  best.witness_half = h;
  best.certificate.lipschitz = total_variation(mu, std::nextafter(lo, -INFINITY), hi);
  double best_upper_eval = 0.0;
  std::size_t evals = 0;

  auto evaluate = [&](double a) {
    const auto ev = detail::eval_window(mu, a - h, a + h);
    ++evals;
    if (evals == 1 || ev.lower > best.lower) {
      best.lower = ev.lower;
      best.witness_a = a;
      best.minimizer_c = ev.c + mu.signed_mass(a - h);
    }
    best_upper_eval = std::max(best_upper_eval, ev.upper);
    return ev;
  };

  if (!(amax > amin) || len == 0.0) {
    const auto ev = evaluate(0.5 * (lo + hi));
    best.upper = ev.upper;
    best.evaluations = evals;
    return best;
  }

  std::vector<double> bp{amin, amax};
  auto add = [&](double x) {
    for (double v : {x - h, x + h})
      if (v > amin && v < amax) bp.push_back(v);
  };
  for (auto it = mu.first_atom_after(std::nextafter(lo - 2.0 * h, -INFINITY)); it != mu.atoms().end() && it->x <= hi + h; ++it)
    add(it->x);
  for (auto it = mu.first_segment_ending_after(lo - 2.0 * h); it != mu.segments().end() && it->a <= hi + h; ++it) {
    add(it->a);
    add(it->b);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  struct Node {
    double a0, a1, f0, f1, fm, bound;
    bool operator<(const Node& o) const { return bound < o.bound; }
  };
  std::priority_queue<Node> heap;
  const double K = best.certificate.lipschitz;
  std::vector<double> vals(bp.size());
  for (std::size_t i = 0; i < bp.size(); ++i) vals[i] = evaluate(bp[i]).upper;

  auto push_node = [&](double a0, double a1, double f0, double f1) {
    const double mid = 0.5 * (a0 + a1), hw = 0.5 * (a1 - a0);
    const auto ev = evaluate(mid);
    const double x0 = mid - h;
    const auto R = detail::deviation_range(mu, x0, a0 + h, a1 + h, ev.c);
    const auto L = detail::deviation_range(mu, x0, a0 - h, a1 - h, ev.c);
    const double dmax = std::max(R.second - L.first, L.second - R.first);
    const double bound = std::min(ev.upper + hw * std::max(dmax, 0.0), std::max(f0, f1) + K * hw);
    heap.push({a0, a1, f0, f1, ev.upper, bound});
  };
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) push_node(bp[i], bp[i + 1], vals[i], vals[i + 1]);

  const double min_width = 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  double accepted = 0.0;
  double smallest = amax - amin;
  std::size_t nodes = heap.size();
  double stop_bound = 0.0;
  while (!heap.empty()) {
    const Node n = heap.top();
    if (n.bound <= best_upper_eval + tol) {
      stop_bound = n.bound;
      break;
    }
    heap.pop();
    const double w = n.a1 - n.a0;
    if (w <= min_width) {
      accepted = std::max(accepted, n.bound);
      continue;
    }
    nodes += 2;
    if (nodes > max_nodes) throw ToleranceError("interval_seminorm: node budget exhausted before reaching tol");
    const double mid = 0.5 * (n.a0 + n.a1);
    push_node(n.a0, mid, n.f0, n.fm);
    push_node(mid, n.a1, n.fm, n.f1);
    smallest = std::min(smallest, 0.5 * w);
  }
  best.upper = std::max({best_upper_eval, accepted, stop_bound, best.lower});
  best.certificate.grid_step = smallest;
  best.certificate.error_bound = best.upper - best_upper_eval;
  best.evaluations = evals;
  return best;
}

}  // namespace wg
