#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "weakgordon/measure.hpp"

namespace wg {

/// A measure file: the measure and, if present, its period.
struct MeasureSpec {
  LocalMeasure mu;
  std::optional<double> period;
  [[nodiscard]] PeriodicMeasure periodic() const {
    if (!period) throw ValidationError("measure file has no \"periodic\" block");
    return {mu, *period};
  }
};

/// Shortest text that round-trips at 17 significant digits; negative zero prints as 0.
inline std::string fmt17(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline int line_of(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Line numbers of the elements of the top-level arrays "atoms" and "segments".
struct ElementLines {
  std::vector<int> atoms;
  std::vector<int> segments;
  int window = 0;
  int periodic = 0;
};

inline ElementLines scan_element_lines(const std::string& text) {
  ElementLines out;
  int depth = 0;
  bool in_string = false;
  std::string last_key, current;
  std::vector<int>* target = nullptr;
  int target_depth = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_string) {
      if (ch == '\\') {
        ++i;
      } else if (ch == '"') {
        in_string = false;
        if (depth == 1) last_key = current;
      } else {
        current += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_string = true;
        current.clear();
        break;
      case '{':
      case '[':
        if (target && depth == target_depth) target->push_back(line_of(text, i));
        ++depth;
        if (depth == 2 && ch == '[') {
          if (last_key == "atoms") target = &out.atoms, target_depth = 2;
          if (last_key == "segments") target = &out.segments, target_depth = 2;
          if (last_key == "window") out.window = line_of(text, i);
        }
        if (depth == 2 && ch == '{' && last_key == "periodic") out.periodic = line_of(text, i);
        break;
      case '}':
      case ']':
        --depth;
        if (depth < 2) target = nullptr, target_depth = -1;
        break;
      default:
        break;
    }
  }
  return out;
}

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

inline double real_field(const nlohmann::json& obj, const char* key, int line, const std::string& what,
                         std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail_at(line, what + " is missing the field \"" + key + "\"");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) fail_at(line, what + " field \"" + key + "\" must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail_at(line, what + " field \"" + key + "\" must be finite");
  return d;
}

}  // namespace detail

/// Parses a measure document. Every error message starts with the line of
/// the offending element.
inline MeasureSpec parse_measure(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::fail_at(detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) detail::fail_at(1, "the measure document must be a JSON object");
  const auto lines = detail::scan_element_lines(text);
  MeasureSpec spec;
  std::optional<Window> window;
  if (doc.contains("window")) {
    const auto& w = doc["window"];
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
      detail::fail_at(lines.window, "\"window\" must be an array [lo, hi] of two numbers");
    const Window win{w[0].get<double>(), w[1].get<double>()};
    if (!std::isfinite(win.lo) || !std::isfinite(win.hi)) detail::fail_at(lines.window, "window bounds must be finite");
    if (!(win.lo < win.hi)) detail::fail_at(lines.window, "window needs lo < hi");
    window = win;
  }
  if (doc.contains("periodic")) {
    const auto& p = doc["periodic"];
    if (!p.is_object()) detail::fail_at(lines.periodic, "\"periodic\" must be an object {\"period\": p}");
    const double per = detail::real_field(p, "period", lines.periodic, "periodic block");
    if (!(per > 0.0)) detail::fail_at(lines.periodic, "period must be positive");
    spec.period = per;
    if (!window) window = Window{0.0, per};
    if (window->lo != 0.0 || window->hi != per)
      detail::fail_at(lines.window ? lines.window : lines.periodic, "a periodic measure needs the window [0, period]");
  }
  if (!window) detail::fail_at(1, "the measure document needs a \"window\" (or a \"periodic\" block)");

  std::vector<Atom> atoms;
  std::vector<int> atom_lines;
  if (doc.contains("atoms")) {
    const auto& arr = doc["atoms"];
    if (!arr.is_array()) detail::fail_at(1, "\"atoms\" must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const int ln = i < lines.atoms.size() ? lines.atoms[i] : 1;
      const std::string what = "atom " + std::to_string(i);
      if (!arr[i].is_object()) detail::fail_at(ln, what + " must be an object {\"x\", \"re\", \"im\"}");
      const double x = detail::real_field(arr[i], "x", ln, what);
      const double re = detail::real_field(arr[i], "re", ln, what, 0.0);
      const double im = detail::real_field(arr[i], "im", ln, what, 0.0);
      if (!window->contains(x))
        detail::fail_at(ln, what + " at x = " + fmt17(x) + " lies outside the window [" + fmt17(window->lo) + ", " +
                                fmt17(window->hi) + "]");
      if (spec.period && x >= *spec.period) detail::fail_at(ln, what + " of a periodic base must satisfy x < period");
      atoms.push_back({x, {re, im}});
      atom_lines.push_back(ln);
    }
  }
  std::vector<Segment> segs;
  std::vector<int> seg_lines;
  if (doc.contains("segments")) {
    const auto& arr = doc["segments"];
    if (!arr.is_array()) detail::fail_at(1, "\"segments\" must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const int ln = i < lines.segments.size() ? lines.segments[i] : 1;
      const std::string what = "segment " + std::to_string(i);
      if (!arr[i].is_object()) detail::fail_at(ln, what + " must be an object {\"a\", \"b\", \"coeffs\"}");
      const double a = detail::real_field(arr[i], "a", ln, what), b = detail::real_field(arr[i], "b", ln, what);
      if (!(a < b)) detail::fail_at(ln, what + " needs a < b");
      if (a < window->lo || b > window->hi) detail::fail_at(ln, what + " exceeds the window");
      if (!arr[i].contains("coeffs") || !arr[i]["coeffs"].is_array())
        detail::fail_at(ln, what + " needs \"coeffs\": [[re, im], ...]");
      std::vector<cplx> coeffs;
      for (const auto& c : arr[i]["coeffs"]) {
        if (c.is_number()) {
          coeffs.emplace_back(c.get<double>(), 0.0);
        } else if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number()) {
          coeffs.emplace_back(c[0].get<double>(), c[1].get<double>());
        } else {
          detail::fail_at(ln, what + " coefficients must be numbers or [re, im] pairs");
        }
        if (!detail::finite(coeffs.back())) detail::fail_at(ln, what + " coefficients must be finite");
      }
      if (coeffs.size() > static_cast<std::size_t>(kMaxDegree) + 1)
        detail::fail_at(ln, what + " has degree above the cap " + std::to_string(kMaxDegree));
      segs.push_back({a, b, Poly(std::move(coeffs))});
      seg_lines.push_back(ln);
    }
  }
  std::vector<std::size_t> order(segs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return segs[l].a < segs[r].a; });
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const auto i = order[k], j = order[k + 1];
    if (segs[i].b > segs[j].a)
      detail::fail_at(std::max(seg_lines[i], seg_lines[j]),
                      "segment " + std::to_string(j) + " overlaps segment " + std::to_string(i) + " (line " +
                          std::to_string(std::min(seg_lines[i], seg_lines[j])) + ")");
  }
  spec.mu = make_measure(std::move(atoms), std::move(segs), *window);
  return spec;
}

inline MeasureSpec load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open measure file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_measure(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline nlohmann::json measure_to_json(const LocalMeasure& mu, std::optional<double> period = {}) {
  nlohmann::json j;
  j["window"] = {mu.window().lo, mu.window().hi};
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : mu.atoms()) j["atoms"].push_back({{"x", a.x}, {"re", a.w.real()}, {"im", a.w.imag()}});
  j["segments"] = nlohmann::json::array();
  for (const auto& s : mu.segments()) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (auto c : s.rho.coeffs()) coeffs.push_back({c.real(), c.imag()});
    j["segments"].push_back({{"a", s.a}, {"b", s.b}, {"coeffs", coeffs}});
  }
  if (period) j["periodic"] = {{"period", *period}};
  return j;
}

/// Writes rows of already formatted cells as CSV.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(std::initializer_list<std::string> cols) { row(std::vector<std::string>(cols)); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void values(std::initializer_list<double> vals) {
    std::vector<std::string> cells;
    for (double v : vals) cells.push_back(fmt17(v));
    row(cells);
  }
  void blank() { out_ << '\n'; }

 private:
  std::ostream& out_;
};

}  // namespace wg
