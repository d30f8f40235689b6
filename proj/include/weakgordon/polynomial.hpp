#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "weakgordon/error.hpp"

namespace wg {

using cplx = std::complex<double>;

/// Largest polynomial degree a density segment may carry.
inline constexpr int kMaxDegree = 15;

/// Polynomial with complex coefficients in a local variable s, stored in
/// ascending powers. Density segments and primitive pieces use it with
/// s measured from the left end of the piece.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }
  Poly(std::initializer_list<cplx> coeffs) : c_(coeffs) { trim(); }

  static Poly constant(cplx v) { return Poly(std::vector<cplx>{v}); }
  static Poly monomial_shift(double d) { return Poly({cplx(d), cplx(1.0)}); }

  [[nodiscard]] int degree() const { return static_cast<int>(c_.size()) - 1; }
  [[nodiscard]] bool is_zero() const { return c_.empty(); }
  [[nodiscard]] bool is_constant() const { return c_.size() <= 1; }
  [[nodiscard]] std::span<const cplx> coeffs() const { return c_; }
  [[nodiscard]] cplx coeff(std::size_t k) const { return k < c_.size() ? c_[k] : cplx{}; }

  [[nodiscard]] bool is_real() const {
    return std::all_of(c_.begin(), c_.end(), [](cplx v) { return v.imag() == 0.0; });
  }

  [[nodiscard]] bool is_finite() const {
    return std::all_of(c_.begin(), c_.end(),
                       [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
  }

  cplx operator()(double s) const {
    cplx r{};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * s + *it;
    return r;
  }

  [[nodiscard]] Poly derivative() const {
    std::vector<cplx> d;
    for (std::size_t k = 1; k < c_.size(); ++k) d.push_back(c_[k] * static_cast<double>(k));
    return Poly(std::move(d));
  }

  /// Antiderivative vanishing at s = 0.
  [[nodiscard]] Poly antiderivative() const {
    if (c_.empty()) return {};
    std::vector<cplx> a(c_.size() + 1);
    for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / static_cast<double>(k + 1);
    return Poly(std::move(a));
  }

  /// Returns q with q(s) = p(s + d).
  [[nodiscard]] Poly shifted(double d) const {
    if (d == 0.0 || c_.size() <= 1) return *this;
    std::vector<cplx> r = c_;
    const std::size_t n = r.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t k = n - 1; k > i; --k) r[k - 1] += d * r[k];
    return Poly(std::move(r));
  }

  /// Returns q with q(s) = p(r s).
  [[nodiscard]] Poly scaled_arg(double r) const {
    std::vector<cplx> out = c_;
    double f = 1.0;
    for (auto& v : out) {
      v *= f;
      f *= r;
    }
    return Poly(std::move(out));
  }

  [[nodiscard]] Poly real_part() const {
    std::vector<cplx> r;
    for (auto v : c_) r.emplace_back(v.real(), 0.0);
    return Poly(std::move(r));
  }
  [[nodiscard]] Poly imag_part() const {
    std::vector<cplx> r;
    for (auto v : c_) r.emplace_back(v.imag(), 0.0);
    return Poly(std::move(r));
  }
  [[nodiscard]] Poly conj() const {
    std::vector<cplx> r;
    for (auto v : c_) r.push_back(std::conj(v));
    return Poly(std::move(r));
  }

  /// Upper bound of |p| on [-h, h].
  [[nodiscard]] double abs_bound(double h) const {
    double r = 0.0, f = 1.0;
    for (auto v : c_) {
      r += std::abs(v) * f;
      f *= std::abs(h);
    }
    return r;
  }

  Poly& operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
    trim();
    return *this;
  }
  Poly& operator*=(cplx f) {
    for (auto& v : c_) v *= f;
    trim();
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, cplx f) { return a *= f; }
  friend Poly operator*(cplx f, Poly a) { return a *= f; }
  friend Poly operator-(Poly a) { return a *= cplx(-1.0); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<cplx> r(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(r));
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

  [[nodiscard]] Poly pow(int e) const {
    Poly r = Poly::constant(1.0);
    for (int i = 0; i < e; ++i) r = r * *this;
    return r;
  }

  /// Integral over [s0, s1].
  [[nodiscard]] cplx integral(double s0, double s1) const {
    const Poly a = antiderivative();
    return a(s1) - a(s0);
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == cplx{}) c_.pop_back();
  }

  std::vector<cplx> c_;
};

namespace detail {

inline double horner(std::span<const double> p, double x) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * x + *it;
  return r;
}

inline std::vector<double> trimmed(std::vector<double> p) {
  while (!p.empty() && p.back() == 0.0) p.pop_back();
  return p;
}

inline std::vector<double> derivative(std::span<const double> p) {
  std::vector<double> d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(p[k] * static_cast<double>(k));
  return d;
}

/// Root of a polynomial monotone on [a, b] with f(a), f(b) of opposite signs.
inline double monotone_root(std::span<const double> p, std::span<const double> dp, double a,
                            double b, double fa) {
  double lo = a, hi = b;
  const bool increasing = fa < 0.0;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = horner(p, x);
    if (f == 0.0) return x;
    if ((f < 0.0) == increasing)
      lo = x;
    else
      hi = x;
    const double df = horner(dp, x);
    double nx = (df != 0.0) ? x - f / df : 0.5 * (lo + hi);
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    if (nx == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
      return nx;
    x = nx;
  }
  return x;
}

}  // namespace detail

/// Real roots of a real polynomial strictly inside (lo, hi), ascending.
inline std::vector<double> real_roots(std::span<const double> coeffs, double lo, double hi) {
  const std::vector<double> p = detail::trimmed({coeffs.begin(), coeffs.end()});
  std::vector<double> roots;
  if (p.size() <= 1 || !(hi > lo)) return roots;
  if (p.size() == 2) {
    const double r = -p[0] / p[1];
    if (r > lo && r < hi) roots.push_back(r);
    return roots;
  }
  const std::vector<double> dp = detail::derivative(p);
  std::vector<double> knots{lo};
  for (double c : real_roots(dp, lo, hi)) knots.push_back(c);
  knots.push_back(hi);
  std::vector<double> vals;
  vals.reserve(knots.size());
  for (double k : knots) vals.push_back(detail::horner(p, k));
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (i > 0 && vals[i] == 0.0) roots.push_back(knots[i]);
    if ((vals[i] < 0.0 && vals[i + 1] > 0.0) || (vals[i] > 0.0 && vals[i + 1] < 0.0))
      roots.push_back(detail::monotone_root(p, dp, knots[i], knots[i + 1], vals[i]));
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

inline std::vector<double> real_coeffs(const Poly& p) {
  std::vector<double> r;
  for (auto v : p.coeffs()) r.push_back(v.real());
  return r;
}

/// Real polynomial |p|^2 for complex p.
inline std::vector<double> abs2_coeffs(const Poly& p) {
  const Poly re = p.real_part(), im = p.imag_part();
  return real_coeffs(re * re + im * im);
}

/// Integral of |p(s)| over [s0, s1]. Exact up to root location for real
/// polynomials; tanh-sinh between the critical points of |p|^2 otherwise.
inline double abs_integral(const Poly& p, double s0, double s1) {
  if (p.is_zero() || !(s1 > s0)) return 0.0;
  if (p.is_constant()) return std::abs(p.coeff(0)) * (s1 - s0);
  const bool real = p.is_real();
  const bool imag = !real && p.real_part().is_zero();
  if (real || imag) {
    const Poly q = real ? p.real_part() : p.imag_part();
    const Poly a = q.antiderivative();
    double total = 0.0, prev = s0;
    auto roots = real_roots(real_coeffs(q), s0, s1);
    roots.push_back(s1);
    for (double r : roots) {
      total += std::abs((a(r) - a(prev)).real());
      prev = r;
    }
    return total;
  }
  std::vector<double> knots{s0};
  for (double r : real_roots(real_coeffs(p.derivative().conj() * p + p.conj() * p.derivative()), s0, s1))
    knots.push_back(r);
  knots.push_back(s1);
  double total = 0.0;
  auto f = [&](double s) { return std::abs(p(s)); };
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i + 1] <= knots[i]) continue;
    // Mapped onto [-1/4, 1/4], where the quadrature measures abscissas from the endpoints directly.
    const double mid = 0.5 * (knots[i] + knots[i + 1]), len = knots[i + 1] - knots[i];
    static thread_local boost::math::quadrature::tanh_sinh<double> quad;
    total += 2.0 * len * quad.integrate([&](double y) { return f(mid + 2.0 * len * y); }, -0.25, 0.25, 1e-12);
  }
  return total;
}

}  // namespace wg
