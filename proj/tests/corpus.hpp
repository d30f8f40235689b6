#pragma once

#include <random>

#include "weakgordon/weakgordon.hpp"

namespace wgtest {

using wg::cplx;

struct CorpusOptions {
  double half_width = 6.0;  ///< window [-half_width, half_width]
  int max_atoms = 20;
  int max_segments = 6;
  bool complex = false;
  double unif_cap = 5.0;
};

/// Seeded generator of atoms plus piecewise-constant densities with
/// ||mu||_unif <= unif_cap.
class Corpus {
 public:
  explicit Corpus(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  cplx weight(bool complex, double scale) {
    const double re = uniform(-scale, scale);
    return complex ? cplx(re, uniform(-scale, scale)) : cplx(re, 0.0);
  }

  wg::LocalMeasure measure(const CorpusOptions& o = {}) {
    const wg::Window w{-o.half_width, o.half_width};
    std::vector<wg::Atom> atoms;
    const int na = integer(0, o.max_atoms);
    for (int i = 0; i < na; ++i) atoms.push_back({uniform(w.lo, w.hi), weight(o.complex, 2.0)});
    std::vector<wg::Segment> segs;
    const int ns = integer(0, o.max_segments);
    std::vector<double> cuts;
    for (int i = 0; i < 2 * ns; ++i) cuts.push_back(uniform(w.lo, w.hi));
    std::sort(cuts.begin(), cuts.end());
    for (int i = 0; i + 1 < 2 * ns; i += 2)
      if (cuts[i] < cuts[i + 1]) segs.push_back({cuts[i], cuts[i + 1], wg::Poly::constant(weight(o.complex, 2.0))});
    wg::LocalMeasure mu = wg::make_measure(std::move(atoms), std::move(segs), w);
    const double nu = wg::norm_unif(mu);
    if (nu > o.unif_cap) mu = cplx(o.unif_cap / nu) * mu;
    return mu;
  }

  /// Atoms only, period p, base window [0, p].
  wg::PeriodicMeasure periodic(double p, int max_atoms = 4, bool complex = false) {
    std::vector<wg::Atom> atoms;
    const int na = integer(1, max_atoms);
    for (int i = 0; i < na; ++i) atoms.push_back({uniform(0.0, p * (1.0 - 1e-9)), weight(complex, 1.5)});
    return {wg::make_measure(std::move(atoms), {}, {0.0, p}), p};
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace wgtest
