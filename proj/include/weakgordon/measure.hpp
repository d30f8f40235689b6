#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "weakgordon/error.hpp"
#include "weakgordon/polynomial.hpp"

namespace wg {

/// Closed window [lo, hi] on which a local measure is represented.
struct Window {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double length() const { return hi - lo; }
  [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Window&, const Window&) = default;
};

struct Atom {
  double x = 0.0;
  cplx w{};
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Density rho(t - a) on [a, b].
struct Segment {
  double a = 0.0;
  double b = 0.0;
  Poly rho;
  [[nodiscard]] cplx at(double t) const { return rho(t - a); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Piecewise affine function through (x[i], y[i]), zero outside [x.front(), x.back()].
struct PiecewiseAffine {
  std::vector<double> x;
  std::vector<cplx> y;

  [[nodiscard]] cplx operator()(double t) const {
    if (x.empty() || t < x.front() || t > x.back()) return {};
    auto it = std::upper_bound(x.begin(), x.end(), t);
    if (it == x.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    const double f = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + f * (y[i] - y[i - 1]);
  }

  [[nodiscard]] cplx slope(std::size_t i) const { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); }

  [[nodiscard]] double lipschitz() const {
    double l = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) l = std::max(l, std::abs(slope(i)));
    return l;
  }

  [[nodiscard]] double sup_abs() const {
    double s = 0.0;
    for (auto v : y) s = std::max(s, std::abs(v));
    return s;
  }

  void validate() const {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("piecewise affine function needs at least two knots");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      if (!(x[i + 1] > x[i])) throw ValidationError("piecewise affine knots must be strictly increasing");
  }
};

/// Complex Radon measure on a window, made of finitely many atoms and
/// non-overlapping polynomial density segments. Instances are immutable and
/// canonical: atoms sorted with distinct positions and nonzero weights,
/// segments sorted and disjoint up to endpoints.
class LocalMeasure {
 public:
  LocalMeasure() = default;

  [[nodiscard]] const Window& window() const { return window_; }
  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
  [[nodiscard]] bool empty() const { return atoms_.empty() && segments_.empty(); }

  [[nodiscard]] bool is_real() const { return real_; }
  /// +1 if the measure is nonnegative, -1 if nonpositive, 0 otherwise.
  [[nodiscard]] int sign_class() const { return sign_; }

  /// mu((-inf, t]).
  [[nodiscard]] cplx cumulative(double t) const {
    const auto na = static_cast<std::size_t>(
        std::upper_bound(atoms_.begin(), atoms_.end(), t, [](double v, const Atom& a) { return v < a.x; }) -
        atoms_.begin());
    const auto ns = static_cast<std::size_t>(
        std::upper_bound(segments_.begin(), segments_.end(), t, [](double v, const Segment& s) { return v < s.b; }) -
        segments_.begin());
    cplx r = atom_prefix_[na] + seg_prefix_[ns];
    if (ns < segments_.size() && segments_[ns].a < t) r += segments_[ns].rho.integral(0.0, t - segments_[ns].a);
    return r;
  }

  /// |mu|((-inf, t]).
  [[nodiscard]] double abs_cumulative(double t) const {
    const auto na = static_cast<std::size_t>(
        std::upper_bound(atoms_.begin(), atoms_.end(), t, [](double v, const Atom& a) { return v < a.x; }) -
        atoms_.begin());
    const auto ns = static_cast<std::size_t>(
        std::upper_bound(segments_.begin(), segments_.end(), t, [](double v, const Segment& s) { return v < s.b; }) -
        segments_.begin());
    double r = atom_abs_prefix_[na] + seg_abs_prefix_[ns];
    if (ns < segments_.size() && segments_[ns].a < t) r += abs_integral(segments_[ns].rho, 0.0, t - segments_[ns].a);
    return r;
  }

  /// Weight of the atom at x, zero if there is none.
  [[nodiscard]] cplx atom_at(double x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x, [](const Atom& a, double v) { return a.x < v; });
    return (it != atoms_.end() && it->x == x) ? it->w : cplx{};
  }

  /// mu((s, t]) for s <= t.
  [[nodiscard]] cplx mass(double s, double t) const {
    cplx r{};
    for (auto it = first_atom_after(s); it != atoms_.end() && it->x <= t; ++it) r += it->w;
    for (auto it = first_segment_ending_after(s); it != segments_.end() && it->a < t; ++it)
      r += it->rho.integral(std::max(s, it->a) - it->a, std::min(t, it->b) - it->a);
    return r;
  }

  /// phi_mu(t) = mu((0, t]) for t >= 0 and -mu((t, 0]) for t < 0.
  [[nodiscard]] cplx phi(double t) const {
    if (!window_.contains(t) || !window_.contains(0.0)) throw DomainError("phi needs t and 0 inside the window");
    return signed_mass(t);
  }

  /// mu((0, t]) for t >= 0 and -mu((t, 0]) for t < 0, for any real t.
  [[nodiscard]] cplx signed_mass(double t) const { return t >= 0.0 ? mass(0.0, t) : -mass(t, 0.0); }

  /// Density at t, taken from the segment with a <= t < b.
  [[nodiscard]] cplx density(double t) const {
    auto it = first_segment_ending_after(t);
    return (it != segments_.end() && it->a <= t) ? it->at(t) : cplx{};
  }

  [[nodiscard]] std::vector<Atom>::const_iterator first_atom_after(double s) const {
    return std::upper_bound(atoms_.begin(), atoms_.end(), s, [](double v, const Atom& a) { return v < a.x; });
  }
  [[nodiscard]] std::vector<Segment>::const_iterator first_segment_ending_after(double s) const {
    return std::upper_bound(segments_.begin(), segments_.end(), s, [](double v, const Segment& g) { return v < g.b; });
  }

  friend LocalMeasure make_measure(std::vector<Atom> atoms, std::vector<Segment> segments, Window window);

 private:
  Window window_{};
  std::vector<Atom> atoms_;
  std::vector<Segment> segments_;
  std::vector<cplx> atom_prefix_{cplx{}};
  std::vector<double> atom_abs_prefix_{0.0};
  std::vector<cplx> seg_prefix_{cplx{}};
  std::vector<double> seg_abs_prefix_{0.0};
  bool real_ = true;
  int sign_ = 1;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

inline int poly_sign_on(const Poly& p, double len) {
  if (!p.is_real()) return 0;
  const auto c = real_coeffs(p);
  double lo = std::min(detail::horner(c, 0.0), detail::horner(c, len));
  double hi = std::max(detail::horner(c, 0.0), detail::horner(c, len));
  for (double r : real_roots(detail::derivative(c), 0.0, len)) {
    const double v = detail::horner(c, r);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo >= 0.0) return 1;
  if (hi <= 0.0) return -1;
  return 0;
}

/// Splits overlapping segments into elementary pieces and sums them.
inline std::vector<Segment> combine_segments(std::vector<Segment> segs) {
  std::sort(segs.begin(), segs.end(), [](const Segment& l, const Segment& r) { return l.a < r.a || (l.a == r.a && l.b < r.b); });
  bool overlap = false;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i)
    if (segs[i].b > segs[i + 1].a) overlap = true;
  if (!overlap) return segs;
  std::vector<double> knots;
  for (const auto& s : segs) {
    knots.push_back(s.a);
    knots.push_back(s.b);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<Segment> out;
  std::size_t first = 0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double e0 = knots[k], e1 = knots[k + 1];
    while (first < segs.size() && segs[first].b <= e0) ++first;
    Poly sum;
    bool any = false;
    for (std::size_t i = first; i < segs.size() && segs[i].a < e1; ++i) {
      if (segs[i].a <= e0 && segs[i].b >= e1) {
        sum += segs[i].rho.shifted(e0 - segs[i].a);
        any = true;
      }
    }
    if (any && !sum.is_zero()) out.push_back({e0, e1, sum});
  }
  return out;
}

}  // namespace detail

/// Validates and canonicalizes atoms and segments on a window. Atoms at the
/// same position are merged; overlapping segments are rejected.
inline LocalMeasure make_measure(std::vector<Atom> atoms, std::vector<Segment> segments, Window window) {
  using detail::fmt;
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || !(window.lo < window.hi))
    throw ValidationError("window must be a finite interval with lo < hi, got [" + fmt(window.lo) + ", " + fmt(window.hi) + "]");
  LocalMeasure m;
  m.window_ = window;
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  for (const auto& a : atoms) {
    if (!std::isfinite(a.x) || !detail::finite(a.w)) throw ValidationError("atom has a non-finite position or weight");
    if (!window.contains(a.x)) throw ValidationError("atom at " + fmt(a.x) + " lies outside the window");
    if (!m.atoms_.empty() && m.atoms_.back().x == a.x)
      m.atoms_.back().w += a.w;
    else
      m.atoms_.push_back(a);
  }
  std::erase_if(m.atoms_, [](const Atom& a) { return a.w == cplx{}; });
  std::sort(segments.begin(), segments.end(), [](const Segment& l, const Segment& r) { return l.a < r.a; });
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!std::isfinite(s.a) || !std::isfinite(s.b) || !s.rho.is_finite())
      throw ValidationError("segment has non-finite data");
    if (!(s.a < s.b)) throw ValidationError("segment [" + fmt(s.a) + ", " + fmt(s.b) + "] is empty or reversed");
    if (s.a < window.lo || s.b > window.hi)
      throw ValidationError("segment [" + fmt(s.a) + ", " + fmt(s.b) + "] exceeds the window");
    if (s.rho.degree() > kMaxDegree)
      throw RepresentationError("segment degree " + std::to_string(s.rho.degree()) + " exceeds the cap " + std::to_string(kMaxDegree));
    if (i + 1 < segments.size() && s.b > segments[i + 1].a)
      throw ValidationError("segments [" + fmt(s.a) + ", " + fmt(s.b) + "] and [" + fmt(segments[i + 1].a) + ", " +
                            fmt(segments[i + 1].b) + "] overlap");
    if (!s.rho.is_zero()) m.segments_.push_back(s);
  }
  bool pos = true, neg = true;
  for (const auto& a : m.atoms_) {
    m.atom_prefix_.push_back(m.atom_prefix_.back() + a.w);
    m.atom_abs_prefix_.push_back(m.atom_abs_prefix_.back() + std::abs(a.w));
    if (a.w.imag() != 0.0) m.real_ = false;
    if (a.w.imag() != 0.0 || a.w.real() < 0.0) pos = false;
    if (a.w.imag() != 0.0 || a.w.real() > 0.0) neg = false;
  }
  for (const auto& s : m.segments_) {
    m.seg_prefix_.push_back(m.seg_prefix_.back() + s.rho.integral(0.0, s.b - s.a));
    m.seg_abs_prefix_.push_back(m.seg_abs_prefix_.back() + abs_integral(s.rho, 0.0, s.b - s.a));
    if (!s.rho.is_real()) m.real_ = false;
    const int sg = detail::poly_sign_on(s.rho, s.b - s.a);
    if (sg != 1) pos = false;
    if (sg != -1) neg = false;
  }
  m.sign_ = pos ? 1 : (neg ? -1 : 0);
  return m;
}

inline LocalMeasure zero_measure(Window w) { return make_measure({}, {}, w); }

inline LocalMeasure lebesgue(Window w) { return make_measure({}, {{w.lo, w.hi, Poly::constant(1.0)}}, w); }

inline LocalMeasure dirac(double x, Window w, cplx weight = 1.0) { return make_measure({{x, weight}}, {}, w); }

/// Restriction to the half-open interval (lo, hi]; the window is kept.
inline LocalMeasure restrict(const LocalMeasure& mu, double lo, double hi) {
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms())
    if (a.x > lo && a.x <= hi) atoms.push_back(a);
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) {
    const double a = std::max(s.a, lo), b = std::min(s.b, hi);
    if (a < b) segs.push_back({a, b, s.rho.shifted(a - s.a)});
  }
  return make_measure(std::move(atoms), std::move(segs), mu.window());
}

/// Restriction to a closed window that becomes the new window.
inline LocalMeasure clip(const LocalMeasure& mu, Window w) {
  if (!(w.lo < w.hi)) throw DomainError("clip window is empty");
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms())
    if (w.contains(a.x)) atoms.push_back(a);
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) {
    const double a = std::max(s.a, w.lo), b = std::min(s.b, w.hi);
    if (a < b) segs.push_back({a, b, s.rho.shifted(a - s.a)});
  }
  return make_measure(std::move(atoms), std::move(segs), w);
}

/// Pushforward under x -> x - p, so that translate(mu, p)(E) = mu(E + p).
inline LocalMeasure translate(const LocalMeasure& mu, double p) {
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x - p, a.w});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) segs.push_back({s.a - p, s.b - p, s.rho});
  return make_measure(std::move(atoms), std::move(segs), {mu.window().lo - p, mu.window().hi - p});
}

/// Rescaling mu_r(E) = r mu(r E) for r > 0.
inline LocalMeasure scale(const LocalMeasure& mu, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("scale factor must be positive");
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x / r, r * a.w});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) segs.push_back({s.a / r, s.b / r, s.rho.scaled_arg(r) * cplx(r * r)});
  return make_measure(std::move(atoms), std::move(segs), {mu.window().lo / r, mu.window().hi / r});
}

inline LocalMeasure operator*(cplx f, const LocalMeasure& mu) {
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x, f * a.w});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) segs.push_back({s.a, s.b, s.rho * f});
  return make_measure(std::move(atoms), std::move(segs), mu.window());
}

inline LocalMeasure operator-(const LocalMeasure& mu) { return cplx(-1.0) * mu; }

/// Sum on the intersection of the two windows.
inline LocalMeasure operator+(const LocalMeasure& m1, const LocalMeasure& m2) {
  const Window w{std::max(m1.window().lo, m2.window().lo), std::min(m1.window().hi, m2.window().hi)};
  if (!(w.lo < w.hi)) throw DomainError("measures have disjoint windows");
  const LocalMeasure a = clip(m1, w), b = clip(m2, w);
  std::vector<Atom> atoms = a.atoms();
  atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
  std::vector<Segment> segs = a.segments();
  segs.insert(segs.end(), b.segments().begin(), b.segments().end());
  return make_measure(std::move(atoms), detail::combine_segments(std::move(segs)), w);
}

inline LocalMeasure operator-(const LocalMeasure& a, const LocalMeasure& b) { return a + (-b); }

inline LocalMeasure real_part(const LocalMeasure& mu) {
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x, a.w.real()});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) segs.push_back({s.a, s.b, s.rho.real_part()});
  return make_measure(std::move(atoms), std::move(segs), mu.window());
}

inline LocalMeasure imag_part(const LocalMeasure& mu) {
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) atoms.push_back({a.x, a.w.imag()});
  std::vector<Segment> segs;
  for (const auto& s : mu.segments()) segs.push_back({s.a, s.b, s.rho.imag_part()});
  return make_measure(std::move(atoms), std::move(segs), mu.window());
}

/// |mu|((lo, hi]).
inline double total_variation(const LocalMeasure& mu, double lo, double hi) {
  double r = 0.0;
  for (auto it = mu.first_atom_after(lo); it != mu.atoms().end() && it->x <= hi; ++it) r += std::abs(it->w);
  for (auto it = mu.first_segment_ending_after(lo); it != mu.segments().end() && it->a < hi; ++it)
    r += abs_integral(it->rho, std::max(lo, it->a) - it->a, std::min(hi, it->b) - it->a);
  return r;
}

inline double total_variation(const LocalMeasure& mu) {
  return total_variation(mu, std::nextafter(mu.window().lo, -INFINITY), mu.window().hi);
}

/// ||mu||_{unif,r} = (1/r) sup |mu|((x, x + r]) over windows (x, x + r] inside
/// the representation window. The supremum is attained at a breakpoint, a
/// one-sided limit there, or at a zero of |rho(x + r)| - |rho(x)| between
/// breakpoints, so it is evaluated exactly.
inline double norm_unif(const LocalMeasure& mu, double r = 1.0) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("norm_unif needs r > 0");
  const double amin = mu.window().lo, amax = mu.window().hi - r;
  if (amax < amin) throw DomainError("norm_unif: r = " + detail::fmt(r) + " exceeds the window length");
  if (mu.empty()) return 0.0;
  std::vector<double> bp{amin, amax};
  auto add = [&](double v) {
    if (v > amin && v < amax) bp.push_back(v);
  };
  for (const auto& a : mu.atoms()) {
    add(a.x);
    add(a.x - r);
  }
  for (const auto& s : mu.segments())
    for (double e : {s.a, s.b}) {
      add(e);
      add(e - r);
    }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  auto f = [&](double a) { return mu.abs_cumulative(a + r) - mu.abs_cumulative(a); };
  auto f_left = [&](double a) {
    return (mu.abs_cumulative(a + r) - std::abs(mu.atom_at(a + r))) - (mu.abs_cumulative(a) - std::abs(mu.atom_at(a)));
  };
  double best = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) {
    best = std::max(best, f(bp[i]));
    if (i > 0) best = std::max(best, f_left(bp[i]));
    if (i + 1 == bp.size() || mu.segments().empty()) continue;
    const double b0 = bp[i], b1 = bp[i + 1], mid = 0.5 * (b0 + b1);
    auto local = [&](double t, double shift) -> Poly {
      auto it = mu.first_segment_ending_after(t);
      if (it == mu.segments().end() || it->a > t) return {};
      return it->rho.shifted(b0 + shift - it->a);
    };
    const Poly p = local(mid + r, r), q = local(mid, 0.0);
    if (p.is_zero() && q.is_zero()) continue;
    std::vector<double> g = abs2_coeffs(p);
    const std::vector<double> h = abs2_coeffs(q);
    if (h.size() > g.size()) g.resize(h.size(), 0.0);
    for (std::size_t k = 0; k < h.size(); ++k) g[k] -= h[k];
    for (double s : real_roots(g, 0.0, b1 - b0)) best = std::max(best, f(b0 + s));
  }
  return best / r;
}

/// Pairing of mu with a piecewise affine test function.
inline cplx test_functional(const LocalMeasure& mu, const PiecewiseAffine& u) {
  u.validate();
  cplx r{};
  for (const auto& a : mu.atoms()) r += a.w * u(a.x);
  for (const auto& s : mu.segments()) {
    for (std::size_t i = 0; i + 1 < u.x.size(); ++i) {
      const double lo = std::max(s.a, u.x[i]), hi = std::min(s.b, u.x[i + 1]);
      if (!(lo < hi)) continue;
      const Poly uu({u(lo), u.slope(i)});
      r += (s.rho.shifted(lo - s.a) * uu).integral(0.0, hi - lo);
    }
  }
  return r;
}

/// Periodic measure given by one period on [0, p).
class PeriodicMeasure {
 public:
  PeriodicMeasure() = default;
  PeriodicMeasure(LocalMeasure base, double period) : base_(std::move(base)), period_(period) {
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw ValidationError("period must be positive and finite");
    if (base_.window().lo != 0.0 || base_.window().hi != period_)
      throw ValidationError("periodic base must live on the window [0, period]");
    if (!base_.atoms().empty() && base_.atoms().back().x >= period_)
      throw ValidationError("periodic base atoms must lie in [0, period)");
  }
  [[nodiscard]] const LocalMeasure& base() const { return base_; }
  [[nodiscard]] double period() const { return period_; }

 private:
  LocalMeasure base_;
  double period_ = 1.0;
};

/// Explicit copies of the periodic base covering the window w.
inline LocalMeasure materialize(const PeriodicMeasure& mu, Window w, std::size_t max_items = 5'000'000) {
  const double p = mu.period();
  const auto k0 = static_cast<long long>(std::floor(w.lo / p)) - 1;
  const auto k1 = static_cast<long long>(std::ceil(w.hi / p)) + 1;
  const auto items = static_cast<double>(k1 - k0 + 1) *
                     static_cast<double>(mu.base().atoms().size() + mu.base().segments().size());
  if (items > static_cast<double>(max_items)) throw ResourceError("periodic materialization exceeds the item budget");
  std::vector<Atom> atoms;
  std::vector<Segment> segs;
  for (long long k = k0; k <= k1; ++k) {
    const double off = static_cast<double>(k) * p;
    for (const auto& a : mu.base().atoms())
      if (w.contains(a.x + off)) atoms.push_back({a.x + off, a.w});
    for (const auto& s : mu.base().segments()) {
      const double a = std::max(s.a + off, w.lo), b = std::min(s.b + off, w.hi);
      if (a < b) segs.push_back({a, b, s.rho.shifted(a - (s.a + off))});
    }
  }
  return make_measure(std::move(atoms), detail::combine_segments(std::move(segs)), w);
}

inline double norm_unif(const PeriodicMeasure& mu, double r = 1.0) {
  const double p = mu.period();
  return norm_unif(materialize(mu, {-r - p, 2.0 * p + 2.0 * r}), r);
}

}  // namespace wg
