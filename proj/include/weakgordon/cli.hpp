#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "weakgordon/constructions.hpp"
#include "weakgordon/gordon.hpp"
#include "weakgordon/io.hpp"
#include "weakgordon/mollify.hpp"
#include "weakgordon/propagator.hpp"
#include "weakgordon/seminorm.hpp"

namespace wg {

inline constexpr const char* kVersion = "0.1.0";

namespace cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kInput = 2, kTolerance = 3, kResource = 4 };

/// Splits "1,2,3" (or with another separator) into reals.
inline std::vector<double> parse_reals(const std::string& text, char sep, const std::string& flag,
                                       std::optional<std::size_t> expected = {}) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(sep, pos), text.size());
    std::string item = text.substr(pos, end - pos);
    const auto first = item.find_first_not_of(" \t"), last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? "" : item.substr(first, last - first + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size() || !std::isfinite(v))
      throw ValidationError(flag + ": '" + item + "' is not a finite number");
    out.push_back(v);
    pos = end + 1;
  }
  if (expected && out.size() != *expected)
    throw ValidationError(flag + " expects " + std::to_string(*expected) + " values separated by '" + sep + "', got " +
                          std::to_string(out.size()));
  return out;
}

inline void require_positive(double v, const std::string& flag) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(flag + " must be positive");
}

inline std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw ValidationError("cannot write output file '" + path + "'");
  return f;
}

inline nlohmann::json seminorm_json(const SeminormResult& r) {
  return {{"lower", r.lower},
          {"upper", r.upper},
          {"minimizer_c", {r.minimizer_c.real(), r.minimizer_c.imag()}},
          {"witness_a", r.witness_a},
          {"witness_half", r.witness_half},
          {"grid_step", r.certificate.grid_step},
          {"lipschitz", r.certificate.lipschitz},
          {"error_bound", r.certificate.error_bound},
          {"evaluations", r.evaluations}};
}

/// Measure restricted or materialized onto a window that covers [lo, hi].
inline LocalMeasure measure_on(const MeasureSpec& spec, double lo, double hi) {
  if (spec.period) return materialize(spec.periodic(), {lo, hi});
  return spec.mu;
}

struct Options {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;
  std::string meta_path = "meta.json";

  std::string measure, out;
  double tol = 0.0;
  std::size_t max_nodes = 4'000'000;

  // seminorm
  std::string interval;
  std::optional<double> window_at;
  std::string csv;
  double csv_step = 0.01;

  // propagate
  std::string z = "0,0", init = "1,0,0,0", grid;
  double from = 0.0;

  // gordon-scan
  std::string periods, r_grid;
  std::optional<double> C;
  std::size_t tail = 3;

  // quasiperiodic
  int alpha_levels = 4, m = 2;
  std::string base1, base2;

  // sharpness
  int m_max = 3;
  double K0 = 24.0;
  std::string plot;
  double plot_step = 0.01, residual_step = 0.01;

  // mollify
  int n = 16;
};

inline int cmd_seminorm(const Options& o, std::ostream& out, nlohmann::json& meta) {
  const MeasureSpec spec = load_measure(o.measure);
  const double tol = o.tol > 0.0 ? o.tol : 1e-9;
  SeminormResult r;
  double lo = 0.0, hi = 0.0;
  if (o.window_at) {
    lo = *o.window_at - 1.0;
    hi = *o.window_at + 1.0;
    r = window_seminorm(measure_on(spec, lo, hi), *o.window_at);
  } else {
    if (o.interval.empty()) throw ValidationError("seminorm needs --interval a,b or --window-at a");
    const auto iv = parse_reals(o.interval, ',', "--interval", 2);
    lo = iv[0];
    hi = iv[1];
    if (!(lo < hi)) throw ValidationError("--interval needs a < b");
    r = interval_seminorm(measure_on(spec, lo, hi), lo, hi, tol, o.max_nodes);
  }
  out << fmt17(r.lower) << ' ' << fmt17(r.upper) << ' ' << fmt17(r.minimizer_c.real()) << ' '
      << fmt17(r.minimizer_c.imag()) << ' ' << fmt17(r.witness_a) << '\n';
  meta["parameters"] = {{"measure", o.measure}, {"interval", {lo, hi}}, {"tol", tol}, {"max_nodes", o.max_nodes}};
  meta["certificates"] = seminorm_json(r);
  if (!o.csv.empty()) {
    require_positive(o.csv_step, "--csv-step");
    const LocalMeasure mu = measure_on(spec, lo, hi);
    const double h = std::min(1.0, 0.5 * (hi - lo));
    const auto centres = uniform_grid(lo + h, hi - h, o.csv_step);
    std::vector<SeminormResult> rows(centres.size());
    parallel_for(centres.size(), o.threads,
                 [&](std::size_t i) { rows[i] = window_value(mu, centres[i] - h, centres[i] + h); });
    auto f = open_output(o.csv);
    CsvWriter w(*f);
    w.header({"a", "lower", "upper"});
    for (std::size_t i = 0; i < rows.size(); ++i) w.values({centres[i], rows[i].lower, rows[i].upper});
    meta["outputs"].push_back(o.csv);
  }
  return kOk;
}

inline int cmd_propagate(const Options& o, std::ostream& out, nlohmann::json& meta) {
  const MeasureSpec spec = load_measure(o.measure);
  const auto zv = parse_reals(o.z, ',', "--z", 2);
  const auto iv = parse_reals(o.init, ',', "--init", 4);
  if (o.grid.empty()) throw ValidationError("propagate needs --grid a:b:step");
  const auto gv = parse_reals(o.grid, ':', "--grid", 3);
  require_positive(gv[2], "grid step");
  if (!(gv[1] >= gv[0])) throw ValidationError("--grid needs a <= b");
  const double tol = o.tol > 0.0 ? o.tol : 1e-12;
  const cplx z(zv[0], zv[1]);
  const State init{{iv[0], iv[1]}, {iv[2], iv[3]}};
  const auto grid = uniform_grid(gv[0], gv[1], gv[2]);
  const LocalMeasure mu = measure_on(spec, std::min(gv[0], o.from) - 1.0, std::max(gv[1], o.from) + 1.0);
  const auto tr = propagate(mu, z, o.from, init, grid, tol);
  const auto span = transfer_matrix(mu, z, grid.front(), grid.back(), tol);
  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  CsvWriter w(file ? *file : out);
  w.header({"t", "u_re", "u_im", "du_re", "du_im"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    w.values({grid[i], tr.u[i].real(), tr.u[i].imag(), tr.du[i].real(), tr.du[i].imag()});
  nlohmann::json jumps = nlohmann::json::array();
  for (const auto& j : tr.jumps)
    jumps.push_back({{"x", j.x}, {"w", {j.w.real(), j.w.imag()}}, {"jump", {j.jump.real(), j.jump.imag()}}});
  meta["parameters"] = {{"measure", o.measure}, {"z", {z.real(), z.imag()}}, {"from", o.from},
                        {"init", iv},           {"grid", gv},                {"tol", tol}};
  meta["certificates"] = {{"det_defect_full_span", span.det_defect}, {"jump_log", jumps}};
  if (!o.out.empty()) meta["outputs"].push_back(o.out);
  return kOk;
}

inline int cmd_gordon(const Options& o, std::ostream& out, nlohmann::json& meta) {
  const MeasureSpec spec = load_measure(o.measure);
  if (o.periods.empty()) throw ValidationError("gordon-scan needs --periods p1,p2,...");
  const auto periods = parse_reals(o.periods, ',', "--periods");
  std::vector<double> r_grid;
  if (!o.r_grid.empty()) r_grid = parse_reals(o.r_grid, ',', "--r-grid");
  for (double p : periods) require_positive(p, "--periods entry");
  for (double r : r_grid) require_positive(r, "--r-grid entry");
  const double tol = o.tol > 0.0 ? o.tol : 1e-9;
  double reach = *std::max_element(periods.begin(), periods.end());
  for (double r : r_grid) reach = std::max(reach, r);
  const LocalMeasure mu = measure_on(spec, -reach, 2.0 * reach);
  const auto rep = exclusion_bound(mu, periods, r_grid, o.C.value_or(0.0), tol, o.tail, o.threads);
  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  CsvWriter w(file ? *file : out);
  w.header({"p", "defect_lo", "defect_hi", "ratio", "log_rate"});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    w.values({r.p, r.defect.lower, r.defect.upper, r.ratio, r.log_rate});
    rows.push_back({{"p", r.p}, {"zero_defect", r.zero_defect}, {"defect", seminorm_json(r.defect)}});
  }
  w.blank();
  w.header({"C_mu", "E_mu"});
  w.values({rep.C_mu, rep.E_mu});
  if (!rep.r_profile.empty()) {
    w.blank();
    w.header({"r", "unif_r"});
    for (auto [r, v] : rep.r_profile) w.values({r, v});
  }
  meta["parameters"] = {{"measure", o.measure}, {"periods", periods}, {"C", o.C.value_or(0.0)},
                        {"r_grid", r_grid},     {"tol", tol},         {"tail", o.tail}};
  meta["certificates"] = {{"rows", rows},
                          {"C_mu", rep.C_infinite ? nlohmann::json("inf") : nlohmann::json(rep.C_mu)},
                          {"C_infinite", rep.C_infinite},
                          {"exclusion", rep.C_infinite ? "all z" : "|z| < E_mu"}};
  if (!o.out.empty()) meta["outputs"].push_back(o.out);
  return kOk;
}

inline int cmd_quasiperiodic(const Options& o, std::ostream& out, nlohmann::json& meta) {
  if (o.base1.empty() || o.base2.empty()) throw ValidationError("quasiperiodic needs --base1 and --base2");
  const PeriodicMeasure b1 = load_measure(o.base1).periodic();
  const PeriodicMeasure b2 = load_measure(o.base2).periodic();
  const double tol = o.tol > 0.0 ? o.tol : 1e-9;
  const LiouvilleAlpha al = liouville_alpha(o.alpha_levels);
  if (o.m < 1 || o.m >= al.levels()) throw ValidationError("--m must satisfy 1 <= m < alpha-levels");
  const auto cert = liouville_certificate(al);
  const auto row = quasiperiodic_row(b1, b2, al, o.m, tol);
  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  CsvWriter w(file ? *file : out);
  w.header({"m", "a_m", "p_m", "q_m", "cert_lhs", "cert_holds"});
  bool ok = true;
  for (int m = 1; m <= al.levels(); ++m) {
    const bool has = m < al.levels();
    const LiouvilleCheck* c = has ? &cert[m - 1] : nullptr;
    w.row({std::to_string(m), al.partial_quotients[m - 1].str(), al.p[m - 1].str(), al.q[m - 1].str(),
           c ? fmt17(c->lhs_upper) : "", c ? (c->holds ? "1" : "0") : ""});
    if (c && !c->holds) ok = false;
  }
  w.blank();
  w.header({"m", "period", "gap", "defect_lo", "defect_hi", "mu2_unif", "bound", "dominated"});
  w.row({std::to_string(row.m), fmt17(row.period), fmt17(row.gap), fmt17(row.defect.lower), fmt17(row.defect.upper),
         fmt17(row.mu2_unif), fmt17(row.bound), row.dominated() ? "1" : "0"});
  if (!row.dominated()) ok = false;
  meta["parameters"] = {{"alpha_levels", o.alpha_levels}, {"m", o.m},   {"base1", o.base1},
                        {"base2", o.base2},               {"tol", tol}};
  meta["certificates"] = {{"alpha_proxy", al.proxy().str()},
                          {"liouville_inequality", ok},
                          {"defect", seminorm_json(row.defect)},
                          {"defect_mu2", seminorm_json(row.defect_mu2)},
                          {"bound", row.bound}};
  if (!o.out.empty()) meta["outputs"].push_back(o.out);
  return ok ? kOk : kTolerance;
}

inline int cmd_sharpness(const Options& o, std::ostream& out, nlohmann::json& meta) {
  const double tol = o.tol > 0.0 ? o.tol : 1e-9;
  require_positive(o.residual_step, "--residual-step");
  const auto S = sharpness_construction(o.m_max, LengthRule{o.K0});
  const auto rep = sharpness_report(S, o.C.value_or(0.9), tol, o.residual_step, o.threads);
  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  CsvWriter w(file ? *file : out);
  w.header({"m", "l_m", "p_m", "s_m", "t_m", "lk_ratio", "mass_diff", "mass_diff_formula", "seminorm_defect_lo",
            "seminorm_defect_hi", "gordon_defect_lo", "gordon_defect_hi", "log_defect", "defect", "log_bound",
            "log_ratio", "ratio", "log_rate"});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    w.values({static_cast<double>(r.m), r.l, r.p, r.s, r.t, r.lk_ratio, r.mass_diff, r.mass_diff_formula,
              r.seminorm_defect.lower, r.seminorm_defect.upper, r.gordon_defect.lower, r.gordon_defect.upper,
              r.log_defect, r.defect, r.log_bound, r.log_ratio, std::exp(r.log_ratio), r.log_rate});
    rows.push_back({{"m", r.m}, {"two_atom_configuration", r.two_atom_configuration},
                    {"seminorm_defect", seminorm_json(r.seminorm_defect)},
                    {"gordon_defect", seminorm_json(r.gordon_defect)}});
  }
  w.blank();
  w.header({"C_mu", "E_mu", "residual_abs", "residual_rel", "residual_range", "max_abs_mass"});
  w.values({rep.C_mu, rep.E_mu, rep.residual_abs, rep.residual_rel, rep.residual_range, rep.max_abs_mass});
  w.blank();
  w.header({"r", "unif_r"});
  for (auto [r, v] : rep.r_profile) w.values({r, v});
  w.blank();
  w.header({"m", "l2_increment"});
  for (std::size_t k = 0; k < rep.level_l2.size(); ++k) w.values({static_cast<double>(k + 1), rep.level_l2[k]});
  if (!o.plot.empty()) {
    require_positive(o.plot_step, "--plot-step");
    auto pf = open_output(o.plot);
    CsvWriter pw(*pf);
    pw.header({"level", "t", "u"});
    for (int lev = 1; lev <= std::min(2, S.m_max); ++lev) {
      const double half = lev * S.p[lev];
      for (auto [t, u] : sharpness_trace(S, -half, half, o.plot_step)) pw.values({static_cast<double>(lev), t, u});
    }
    meta["outputs"].push_back(o.plot);
  }
  meta["parameters"] = {{"m_max", o.m_max}, {"C", o.C.value_or(0.9)}, {"K0", o.K0}, {"tol", tol}, {"residual_step", o.residual_step}};
  meta["certificates"] = {{"rows", rows}, {"C_mu", rep.C_mu}, {"E_mu", rep.E_mu}, {"residual_abs", rep.residual_abs}};
  if (!o.out.empty()) meta["outputs"].push_back(o.out);
  return kOk;
}

inline int cmd_mollify(const Options& o, std::ostream& out, nlohmann::json& meta) {
  const MeasureSpec spec = load_measure(o.measure);
  if (o.n < 1) throw DomainError("--n must be a positive integer");
  const double tol = o.tol > 0.0 ? o.tol : 1e-9;
  const LocalMeasure& mu = spec.mu;
  const LocalMeasure mn = mollify(mu, o.n);
  double lo = mn.window().lo, hi = mn.window().hi;
  if (!o.interval.empty()) {
    const auto iv = parse_reals(o.interval, ',', "--interval", 2);
    lo = iv[0];
    hi = iv[1];
  }
  const auto dist = interval_seminorm(mu - mn, lo, hi, tol);
  const double u0 = norm_unif(mu), u1 = norm_unif(mn);
  out << fmt17(u0) << ' ' << fmt17(u1) << ' ' << fmt17(dist.lower) << ' ' << fmt17(dist.upper) << '\n';
  if (!o.out.empty()) {
    auto f = open_output(o.out);
    *f << measure_to_json(mn).dump(2) << '\n';
    meta["outputs"].push_back(o.out);
  }
  meta["parameters"] = {{"measure", o.measure}, {"n", o.n}, {"interval", {lo, hi}}, {"tol", tol}};
  meta["certificates"] = {{"unif_before", u0}, {"unif_after", u1}, {"distance", seminorm_json(dist)}};
  return kOk;
}

/// Entry point of the command line tool; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Weak Gordon seminorms, transfer matrices and eigenvalue-exclusion bounds", "wgordon"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "seed for corpus-based runs");
  app.add_option("--meta", o.meta_path, "path of the JSON sidecar");

  auto* sn = app.add_subcommand("seminorm", "weak seminorm of a measure on an interval");
  sn->add_option("--measure", o.measure)->required();
  sn->add_option("--interval", o.interval, "a,b");
  sn->add_option("--tol", o.tol);
  sn->add_option("--max-nodes", o.max_nodes, "refinement budget; exhausting it is a tolerance failure")
      ->check(CLI::PositiveNumber);
  sn->add_option("--window-at", o.window_at, "single window [a-1, a+1]");
  sn->add_option("--csv", o.csv, "dump of a -> N(a)");
  sn->add_option("--csv-step", o.csv_step);

  auto* pr = app.add_subcommand("propagate", "solution trace of -u'' + mu u = z u");
  pr->add_option("--measure", o.measure)->required();
  pr->add_option("--z", o.z, "re,im");
  pr->add_option("--from", o.from);
  pr->add_option("--init", o.init, "u0re,u0im,du0re,du0im");
  pr->add_option("--grid", o.grid, "a:b:step")->required();
  pr->add_option("--out", o.out);
  pr->add_option("--tol", o.tol);

  auto* gs = app.add_subcommand("gordon-scan", "translation defects, C_mu and E_mu");
  gs->add_option("--measure", o.measure)->required();
  gs->add_option("--periods", o.periods)->required();
  gs->add_option("--C", o.C);
  gs->add_option("--r-grid", o.r_grid);
  gs->add_option("--tol", o.tol);
  gs->add_option("--tail", o.tail);
  gs->add_option("--out", o.out);

  auto* qp = app.add_subcommand("quasiperiodic", "Liouville-type quasiperiodic example");
  qp->add_option("--alpha-levels", o.alpha_levels);
  qp->add_option("--base1", o.base1)->required();
  qp->add_option("--base2", o.base2)->required();
  qp->add_option("--m", o.m);
  qp->add_option("--tol", o.tol);
  qp->add_option("--out", o.out);

  auto* sh = app.add_subcommand("sharpness", "pure point construction with eigenvalue -1");
  sh->add_option("--m-max", o.m_max);
  sh->add_option("--C", o.C);
  sh->add_option("--K0", o.K0, "factor of the length rule");
  sh->add_option("--tol", o.tol);
  sh->add_option("--residual-step", o.residual_step);
  sh->add_option("--out", o.out);
  sh->add_option("--plot", o.plot);
  sh->add_option("--plot-step", o.plot_step);

  auto* mo = app.add_subcommand("mollify", "convolution with the polynomial bump");
  mo->add_option("--measure", o.measure)->required();
  mo->add_option("--n", o.n);
  mo->add_option("--interval", o.interval);
  mo->add_option("--tol", o.tol);
  mo->add_option("--out", o.out, "mollified measure as JSON");

  nlohmann::json meta;
  int code = kOk;
  std::string sub;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kInput;
  }

  meta["tool"] = "wgordon";
  meta["version"] = kVersion;
  meta["threads"] = o.threads;
  meta["seed"] = o.seed ? nlohmann::json(*o.seed) : nlohmann::json(nullptr);
  meta["outputs"] = nlohmann::json::array();
  try {
    if (code != kOk) {
      // Command line rejected: only the sidecar is written.
    } else if (sn->parsed()) {
      sub = "seminorm";
      code = cmd_seminorm(o, out, meta);
    } else if (pr->parsed()) {
      sub = "propagate";
      code = cmd_propagate(o, out, meta);
    } else if (gs->parsed()) {
      sub = "gordon-scan";
      code = cmd_gordon(o, out, meta);
    } else if (qp->parsed()) {
      sub = "quasiperiodic";
      code = cmd_quasiperiodic(o, out, meta);
    } else if (sh->parsed()) {
      sub = "sharpness";
      code = cmd_sharpness(o, out, meta);
    } else if (mo->parsed()) {
      sub = "mollify";
      code = cmd_mollify(o, out, meta);
    }
  } catch (const ToleranceError& e) {
    err << "tolerance failure: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kTolerance;
  } catch (const ResourceError& e) {
    err << "resource budget exceeded: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kResource;
  } catch (const RepresentationError& e) {
    err << "representation budget exceeded: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kResource;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kInternal;
  }
  meta["subcommand"] = sub;
  meta["exit_code"] = code;
  std::ofstream mf(o.meta_path);
  if (!mf) {
    err << "error: cannot write meta sidecar '" << o.meta_path << "'\n";
    return code == kOk ? kInput : code;
  }
  mf << meta.dump(2) << '\n';
  return code;
}

}  // namespace cli
}  // namespace wg
