#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyiso/calculus.hpp"
#include "polyiso/circulant.hpp"
#include "polyiso/constant_lab.hpp"
#include "polyiso/convexifier.hpp"
#include "polyiso/error.hpp"
#include "polyiso/manifold.hpp"
#include "polyiso/polygon.hpp"

namespace polyiso {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Polygon CSV: one "x,y" vertex per line; '#' starts a comment.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

inline std::vector<Point> parse_polygon_csv(std::istream& in) {
  std::vector<Point> pts;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected 'x,y'");
    }
    pts.push_back({detail::parse_double(text.substr(0, comma), line),
                   detail::parse_double(text.substr(comma + 1), line)});
  }
  return pts;
}

inline VertexPolygon read_polygon_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return from_vertices(parse_polygon_csv(in));
}

inline void write_polygon_csv(std::ostream& out, const VertexPolygon& poly) {
  char buf[64];
  for (const Point& p : poly.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x, p.y);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// ManifoldPoint JSON: {"n": int, "x": [...], "r": [...]}

inline Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Json to_json(const ManifoldPoint& m) {
  return Json{{"n", m.n()}, {"x", to_json(m.x)}, {"r", to_json(m.r)}};
}

inline ManifoldPoint manifold_point_from_json(const Json& j) {
  try {
    const auto xs = j.at("x").get<std::vector<double>>();
    const auto rs = j.at("r").get<std::vector<double>>();
    if (j.contains("n") && j.at("n").get<std::size_t>() != xs.size()) {
      throw Error(ErrorCode::ParseError, "\"n\" does not match the length of \"x\"");
    }
    if (xs.size() != rs.size()) throw Error(ErrorCode::ParseError, "\"x\" and \"r\" differ in length");
    ManifoldPoint m;
    m.x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    m.r = Eigen::Map<const Vector>(rs.data(), static_cast<Eigen::Index>(rs.size()));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

inline ManifoldPoint read_manifold_point_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return manifold_point_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

// ---------------------------------------------------------------------------
// Serialization with a fixed float format (17 significant digits) so that
// equal inputs give byte-identical output. Non-finite numbers become null.

namespace detail {

inline void write_json(std::ostream& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out << "null";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
      }
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << '[' << nl;
      bool first = true;
      for (const auto& item : j) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad;
        write_json(out, item, indent, depth + 1);
      }
      out << nl << close_pad << ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
        write_json(out, it.value(), indent, depth + 1);
      }
      out << nl << close_pad << '}';
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace detail

inline void write_json(std::ostream& out, const Json& j, int indent = 2) {
  detail::write_json(out, j, indent, 0);
}

inline std::string dump_json(const Json& j, int indent = 2) {
  std::ostringstream out;
  write_json(out, j, indent);
  return out.str();
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const ConstraintResiduals& r) {
  return Json{{"angle_sum", r.angle_sum},
              {"radius_sum", r.radius_sum},
              {"barycenter_cos", r.barycenter_cos},
              {"barycenter_sin", r.barycenter_sin}};
}

inline Json to_json(const PolygonSummary& s) {
  return Json{{"perimeter", s.perimeter},
              {"area", s.area},
              {"side_square_sum", s.side_square_sum},
              {"deficit", s.deficit},
              {"side_variance", s.side_variance},
              {"radius_variance", s.radius_variance},
              {"angle_variance", s.angle_variance},
              {"phi", s.phi}};
}

inline Json to_json(const InequalityRecord& r) {
  return Json{{"name", r.name}, {"lhs", r.lhs},           {"rhs", r.rhs},
              {"slack", r.slack}, {"applicable", r.applicable}, {"pass", r.pass}};
}

inline Json to_json(const InequalityReport& rep) {
  Json records = Json::array();
  for (const auto& r : rep.records) records.push_back(to_json(r));
  return Json{{"n", rep.n},
              {"convex", rep.convex},
              {"summary", to_json(rep.summary)},
              {"records", records},
              {"equivalence_gap", rep.equivalence_gap},
              {"pass", rep.pass()}};
}

inline Json to_json(const ManifoldSample& s) {
  return Json{{"n", s.point.n()},
              {"x", to_json(s.point.x)},
              {"r", to_json(s.point.r)},
              {"convex", s.convex},
              {"residuals", to_json(s.residuals)}};
}

inline Json to_json(const ConstantEstimate& e) {
  return Json{{"n", e.n},
              {"seed", e.seed},
              {"c_hat", e.c_hat},
              {"winning_phase", e.winning_phase},
              {"global_best", e.global_best},
              {"refined_best", e.refined_best},
              {"rayleigh_bound", e.rayleigh_bound},
              {"sigma", e.sigma},
              {"sample_count", e.sample_count},
              {"skipped_near_star", e.skipped_near_star},
              {"optimizer_iterations", e.optimizer_iterations},
              {"budget_exhausted", e.budget_exhausted},
              {"argmax", to_json(e.argmax)},
              {"rayleigh_direction", to_json(e.rayleigh_direction)}};
}

inline Json to_json(const DerivativeReport& r) {
  return Json{{"function", r.function},
              {"n", r.n},
              {"step", r.step},
              {"gradient_max_abs_error", r.gradient_max_abs_error},
              {"hessian_max_relative_error", r.hessian_max_relative_error},
              {"worst_row", r.worst_row},
              {"worst_col", r.worst_col}};
}

inline Json to_json(const SharpnessResult& s) {
  Json t = Json::array(), ratios = Json::array();
  for (double v : s.t) t.push_back(v);
  for (double v : s.ratios) ratios.push_back(v);
  return Json{{"n", s.n}, {"t", t}, {"ratios", ratios}, {"limit", s.limit}, {"rayleigh", s.rayleigh}};
}

inline Json to_json(const ScalingReport& r) {
  return Json{{"alpha", r.alpha},
              {"original", to_json(r.original)},
              {"dilated", to_json(r.dilated)},
              {"deficit_error", r.deficit_error},
              {"angle_variance_error", r.angle_variance_error},
              {"radius_variance_error", r.radius_variance_error},
              {"area_error", r.area_error},
              {"ratio_growth", r.ratio_growth}};
}

inline Json to_json(const VertexPolygon& poly) {
  Json arr = Json::array();
  for (const Point& p : poly.vertices()) arr.push_back(Json::array({p.x, p.y}));
  return arr;
}

inline Json to_json(const FlipStep& s, std::size_t step) {
  Json idx = Json::array();
  for (std::size_t i : s.pocket.vertices) idx.push_back(i);
  return Json{{"step", step},
              {"pocket", idx},
              {"lid", Json::array({s.pocket.lid_start, s.pocket.lid_end})},
              {"perimeter", s.perimeter},
              {"area", s.area},
              {"deficit", s.deficit}};
}

}  // namespace polyiso
