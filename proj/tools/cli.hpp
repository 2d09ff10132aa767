#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "polyiso/polyiso.hpp"

namespace polyiso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

struct RunConfig {
  std::string subcommand;
  std::string n_spec = "3-12";
  std::uint64_t seed = 1;
  int budget = 20000;
  int count = 0;
  std::optional<double> tol;
  std::string input;
  std::string out;
  std::string format = "json";
  std::size_t max_flips = 10000;
  std::string trace;
  std::string alpha_spec = "0.5,2,10";
  std::optional<double> c_main;
  std::optional<double> c_side;
};

/// Parses "4", "3-12", "3,5,8" or mixtures such as "3-5,8".
inline std::vector<int> parse_n_list(const std::string& text) {
  auto to_int = [&text](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::ParseError, "bad --n value '" + text + "'");
    }
    return v;
  };
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw Error(ErrorCode::ParseError, "bad --n value '" + text + "'");
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_int(item));
    } else {
      const int lo = to_int(std::string_view(item).substr(0, dash));
      const int hi = to_int(std::string_view(item).substr(dash + 1));
      if (hi < lo) throw Error(ErrorCode::ParseError, "empty range in --n '" + text + "'");
      for (int k = lo; k <= hi; ++k) out.push_back(k);
    }
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "empty --n");
  for (int k : out) {
    if (k < 3) throw Error(ErrorCode::TooFewVertices, "n must be at least 3, got " + std::to_string(k));
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::ParseError, "bad number list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "empty number list");
  return out;
}

/// Codes caused by the caller's input rather than by a failed check.
inline bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::TooFewVertices:
    case ErrorCode::DuplicateConsecutiveVertex:
    case ErrorCode::DegenerateZeroArea:
    case ErrorCode::BarycenterOutside:
    case ErrorCode::NonpositiveCentralAngle:
    case ErrorCode::ZeroRadius:
    case ErrorCode::InvalidManifoldPoint:
    case ErrorCode::NotOnManifold:
    case ErrorCode::NotSimple:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NotTangent:
    case ErrorCode::StepTooSmall:
      return true;
    default:
      return false;
  }
}

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline Json header(const RunConfig& cfg) {
  return Json{{"command", cfg.subcommand}, {"seed", cfg.seed}};
}

inline std::string seed_line(const RunConfig& cfg) {
  return "# seed=" + std::to_string(cfg.seed) + "\n";
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline VertexPolygon polygon_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::ParseError, "--input is required");
  return read_polygon_csv(cfg.input);
}

struct Output {
  std::string text;
  int code = kExitOk;
};

// ---------------------------------------------------------------------------

inline Output run_verify(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::ParseError, "--input is required");
  const double tol = cfg.tol.value_or(kInequalityTol);
  const InequalityConstants constants{cfg.c_main, cfg.c_side};
  InequalityReport report;
  if (ends_with(cfg.input, ".json")) {
    report = verify(read_manifold_point_json(cfg.input), constants, tol);
  } else {
    report = verify(read_polygon_csv(cfg.input), constants, tol);
  }
  Output o;
  o.code = report.pass() ? kExitOk : kExitCheckFailed;
  if (cfg.format == "csv") {
    o.text = seed_line(cfg) + "name,lhs,rhs,slack,applicable,pass\n";
    for (const auto& r : report.records) {
      o.text += r.name + "," + fmt(r.lhs) + "," + fmt(r.rhs) + "," + fmt(r.slack) + "," +
                (r.applicable ? "true" : "false") + "," + (r.pass ? "true" : "false") + "\n";
    }
    return o;
  }
  Json j = header(cfg);
  j["input"] = cfg.input;
  j["tolerance"] = tol;
  j["report"] = to_json(report);
  o.text = dump_json(j) + "\n";
  return o;
}

inline Output run_sample(const RunConfig& cfg) {
  const std::vector<int> ns = parse_n_list(cfg.n_spec);
  const int count = cfg.count > 0 ? cfg.count : 10;
  std::mt19937_64 rng(cfg.seed);
  Output o;
  if (cfg.format == "csv") o.text = seed_line(cfg) + "n,index,convex,deficit,max_residual\n";
  for (int n : ns) {
    for (int i = 0; i < count; ++i) {
      const ManifoldSample s = sample(n, rng, 10000);
      if (cfg.format == "csv") {
        o.text += std::to_string(n) + "," + std::to_string(i) + "," + (s.convex ? "true" : "false") +
                  "," + fmt(evaluate<double>(s.point.x, s.point.r).deficit) + "," +
                  fmt(s.residuals.max_abs()) + "\n";
      } else {
        Json j{{"seed", cfg.seed}, {"index", i}};
        j.update(to_json(s));
        o.text += dump_json(j, 0) + "\n";
      }
    }
  }
  return o;
}

inline Output run_estimate_cn(const RunConfig& cfg) {
  const std::vector<int> ns = parse_n_list(cfg.n_spec);
  Output o;
  Json results = Json::array();
  std::string csv = seed_line(cfg) + "n,c_hat,sigma,min_eig_on_Z\n";
  for (int n : ns) {
    const ConstantEstimate est = estimate_cn(n, cfg.budget, cfg.seed);
    const CoercivityBound coercivity = min_eig_on_Z(n);
    Json j = to_json(est);
    j["min_eig_on_Z"] = coercivity.dense;
    j["side_variance_constant"] =
        Json{{"value", estimate_side_variance_constant(n, cfg.budget, cfg.seed)}, {"source", "empirical"}};
    if (cfg.count > 0) {
      const HoldoutResult h = holdout_check(n, est.c_hat, cfg.count, cfg.seed + 0x9e3779b97f4a7c15ULL);
      j["holdout"] = Json{{"samples", h.samples}, {"violations", h.violations}, {"worst_ratio", h.worst_ratio}};
      if (h.violations > 0) o.code = kExitCheckFailed;
    }
    results.push_back(std::move(j));
    csv += std::to_string(n) + "," + fmt(est.c_hat) + "," + fmt(est.sigma) + "," + fmt(coercivity.dense) + "\n";
  }
  if (cfg.format == "csv") {
    o.text = csv;
    return o;
  }
  Json j = header(cfg);
  j["budget"] = cfg.budget;
  j["results"] = std::move(results);
  o.text = dump_json(j) + "\n";
  return o;
}

inline Output run_sharpness(const RunConfig& cfg) {
  const std::vector<int> ns = parse_n_list(cfg.n_spec);
  const int count = cfg.count > 0 ? cfg.count : 20;
  const double tol = cfg.tol.value_or(0.02);
  const std::vector<double> ts{1e-2, 3e-3, 1e-3};
  std::mt19937_64 rng(cfg.seed);
  Output o;
  Json results = Json::array();
  std::string csv = seed_line(cfg) + "n,direction,rayleigh,ratio_at_smallest_t,limit,relative_error\n";
  for (int n : ns) {
    const SigmaEstimate sigma = sigma_estimate(n);
    double worst = 0.0;
    double smallest_limit = std::numeric_limits<double>::infinity();
    Json dirs = Json::array();
    for (int k = 0; k < count; ++k) {
      const Vector w = random_tangent_direction(sigma.basis, rng);
      const SharpnessResult res = sharpness_probe(sigma, w, ts);
      const double at_small = res.ratios.back();
      const double err = std::abs(at_small - res.rayleigh) / res.rayleigh;
      worst = std::max(worst, err);
      smallest_limit = std::min(smallest_limit, res.limit);
      Json d = to_json(res);
      d["relative_error"] = err;
      dirs.push_back(std::move(d));
      csv += std::to_string(n) + "," + std::to_string(k) + "," + fmt(res.rayleigh) + "," + fmt(at_small) +
             "," + fmt(res.limit) + "," + fmt(err) + "\n";
    }
    const bool pass = worst <= tol && smallest_limit > 0.0;
    if (!pass) o.code = kExitCheckFailed;
    results.push_back(Json{{"n", n},
                           {"sigma", sigma.sigma},
                           {"max_relative_error", worst},
                           {"smallest_limit", smallest_limit},
                           {"pass", pass},
                           {"directions", std::move(dirs)}});
  }
  if (cfg.format == "csv") {
    o.text = csv;
    return o;
  }
  Json j = header(cfg);
  j["tolerance"] = tol;
  j["results"] = std::move(results);
  o.text = dump_json(j) + "\n";
  return o;
}

inline Output run_spectral(const RunConfig& cfg) {
  const std::vector<int> ns = parse_n_list(cfg.n_spec);
  Output o;
  Json results = Json::array();
  std::string csv = seed_line(cfg) + "n,eigenvalues,min_eig_on_Z\n";
  for (int n : ns) {
    const CirculantSystem c = build_circulant(n);
    const CoercivityBound b = min_eig_on_Z(n);
    Json eig = Json::array(), norms = Json::array();
    std::string eig_text;
    for (long v : c.eigenvalues) {
      eig.push_back(v);
      eig_text += (eig_text.empty() ? "" : " ") + std::to_string(v);
    }
    for (Eigen::Index k = 0; k < c.basis.cols(); ++k) norms.push_back(c.basis.col(k).norm());
    results.push_back(Json{{"n", n},
                           {"eigenvalues", std::move(eig)},
                           {"basis_norms", std::move(norms)},
                           {"min_eig_on_Z", b.closed_form},
                           {"min_eig_on_Z_dense", b.dense}});
    csv += std::to_string(n) + "," + eig_text + "," + fmt(b.closed_form) + "\n";
  }
  if (cfg.format == "csv") {
    o.text = csv;
    return o;
  }
  Json j = header(cfg);
  j["results"] = std::move(results);
  o.text = dump_json(j) + "\n";
  return o;
}

inline Output run_derivatives(const RunConfig& cfg) {
  const std::vector<int> ns = parse_n_list(cfg.n_spec);
  const double hessian_tol = cfg.tol.value_or(1e-5);
  const double inf = std::numeric_limits<double>::infinity();
  Output o;
  Json results = Json::array();
  std::string csv = seed_line(cfg) +
                    "n,phi_gradient_max_abs,phi_hessian_max_relative,delta_gradient_max_relative,sigma,"
                    "sigma_step_gap\n";
  for (int n : ns) {
    const DerivativeReport phi = verify_hessian_phi(n, kDefaultStep, inf);
    const DerivativeReport delta = verify_gradient_delta(n, kDefaultStep, inf);
    const double delta_rel = delta.gradient_max_abs_error / deficit_gradient_at_star(n).cwiseAbs().maxCoeff();
    const double sigma_fine = sigma_estimate(n, 1e-5).sigma;
    const double sigma_coarse = sigma_estimate(n, 1e-4).sigma;
    const double gap = std::abs(sigma_fine - sigma_coarse) / sigma_fine;
    const bool pass = phi.gradient_max_abs_error <= 1e-6 && phi.hessian_max_relative_error <= hessian_tol &&
                      delta_rel <= 1e-6 && sigma_fine > 0.0 && gap <= 1e-3;
    if (!pass) o.code = kExitCheckFailed;
    results.push_back(Json{{"n", n},
                           {"phi", to_json(phi)},
                           {"delta", to_json(delta)},
                           {"delta_gradient_max_relative", delta_rel},
                           {"sigma", sigma_fine},
                           {"sigma_coarse_step", sigma_coarse},
                           {"sigma_step_gap", gap},
                           {"pass", pass}});
    csv += std::to_string(n) + "," + fmt(phi.gradient_max_abs_error) + "," +
           fmt(phi.hessian_max_relative_error) + "," + fmt(delta_rel) + "," + fmt(sigma_fine) + "," +
           fmt(gap) + "\n";
  }
  if (cfg.format == "csv") {
    o.text = csv;
    return o;
  }
  Json j = header(cfg);
  j["results"] = std::move(results);
  o.text = dump_json(j) + "\n";
  return o;
}

inline Json shape_json(const VertexPolygon& p) {
  return Json{{"perimeter", p.perimeter()},
              {"area", p.area()},
              {"deficit", describe(p, {}).deficit},
              {"convex", p.convex()}};
}

inline Output run_convexify(const RunConfig& cfg) {
  const VertexPolygon poly = polygon_input(cfg);
  const FlipTrace trace = convexify(poly, cfg.max_flips);
  const VertexPolygon& last = trace.polygons.back();

  bool pass = last.convex();
  double drift = 0.0;
  const double p0 = poly.perimeter();
  double prev_deficit = describe(poly, {}).deficit;
  for (std::size_t k = 1; k < trace.polygons.size(); ++k) {
    const VertexPolygon& cur = trace.polygons[k];
    drift = std::max(drift, std::abs(cur.perimeter() - p0) / p0);
    if (!(cur.area() > trace.polygons[k - 1].area())) pass = false;
    if (trace.steps[k - 1].deficit > prev_deficit + 1e-9 * p0 * p0) pass = false;
    prev_deficit = trace.steps[k - 1].deficit;
  }
  if (drift > 1e-9) pass = false;

  if (!cfg.trace.empty()) {
    std::ofstream t(cfg.trace);
    if (!t) throw Error(ErrorCode::ParseError, "cannot open " + cfg.trace);
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
      Json rec{{"seed", cfg.seed}};
      rec.update(to_json(trace.steps[k], k + 1));
      rec["vertices"] = to_json(trace.polygons[k + 1]);
      t << dump_json(rec, 0) << "\n";
    }
  }

  Output o;
  o.code = pass ? kExitOk : kExitCheckFailed;
  if (cfg.format == "csv") {
    std::ostringstream s;
    s << seed_line(cfg);
    write_polygon_csv(s, last);
    o.text = s.str();
    return o;
  }
  Json j = header(cfg);
  j["input"] = cfg.input;
  j["flips"] = trace.flips();
  j["perimeter_drift"] = drift;
  j["initial"] = shape_json(poly);
  j["final"] = shape_json(last);
  j["vertices"] = to_json(last);
  j["pass"] = pass;
  o.text = dump_json(j) + "\n";
  return o;
}

inline Output run_scaling(const RunConfig& cfg) {
  const VertexPolygon poly =
      cfg.input.empty() ? from_vertices({{0, 0}, {2, 0}, {2, 1}, {0, 1}}) : read_polygon_csv(cfg.input);
  const double tol = cfg.tol.value_or(1e-12);
  Output o;
  Json reports = Json::array();
  std::string csv = seed_line(cfg) + "alpha,deficit,angle_variance,ratio_growth,pass\n";
  for (double alpha : parse_double_list(cfg.alpha_spec)) {
    const ScalingReport r = scaling_check(poly, alpha);
    const bool pass = r.pass(tol);
    if (!pass) o.code = kExitCheckFailed;
    Json j = to_json(r);
    j["pass"] = pass;
    reports.push_back(std::move(j));
    csv += fmt(alpha) + "," + fmt(r.dilated.deficit) + "," + fmt(r.dilated.angle_variance) + "," +
           fmt(r.ratio_growth) + "," + (pass ? "true" : "false") + "\n";
  }
  if (cfg.format == "csv") {
    o.text = csv;
    return o;
  }
  // sigma_a^2 / delta along alpha -> 0.
  Json growth = Json::array();
  for (double alpha : {1.0, 1e-1, 1e-2, 1e-3}) {
    const ScalingReport r = scaling_check(poly, alpha);
    growth.push_back(Json{{"alpha", alpha}, {"ratio_growth", r.ratio_growth}});
  }
  Json j = header(cfg);
  j["input"] = cfg.input.empty() ? std::string("builtin:rectangle_2x1") : cfg.input;
  j["tolerance"] = tol;
  j["reports"] = std::move(reports);
  j["shrinking"] = std::move(growth);
  o.text = dump_json(j) + "\n";
  return o;
}

}  // namespace detail

/// Parses argv, runs one subcommand, and writes its report to `out` (or --out).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Numerical laboratory for the stability of the polygonal isoperimetric inequality",
               "polyiso"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto add_format = [&](CLI::App* s) {
    s->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    s->add_option("--out", cfg.out, "Write the report here instead of stdout");
    s->add_option("--seed", cfg.seed, "RNG seed, recorded in the output");
  };

  auto* verify_cmd = app.add_subcommand("verify", "Check every inequality on one polygon");
  verify_cmd->add_option("--input", cfg.input, "Polygon CSV, or manifold point JSON (*.json)");
  verify_cmd->add_option("--tol", cfg.tol, "Relative slack tolerance factor (default 1e-9)");
  verify_cmd->add_option("--c-main", cfg.c_main, "Constant for the main stability inequality");
  verify_cmd->add_option("--c-side", cfg.c_side, "Constant for the side-variance inequality");
  add_format(verify_cmd);

  auto* sample_cmd = app.add_subcommand("sample", "Emit sampled manifold points as JSON lines");
  sample_cmd->add_option("--n", cfg.n_spec, "Polygon sizes: 5, 3-12 or 3,5,8");
  sample_cmd->add_option("--count", cfg.count, "Points per n (default 10)");
  add_format(sample_cmd);

  auto* estimate_cmd = app.add_subcommand("estimate-cn", "Estimate the sharp stability constant");
  estimate_cmd->add_option("--n", cfg.n_spec, "Polygon sizes");
  estimate_cmd->add_option("--budget", cfg.budget, "Global-phase samples per n");
  estimate_cmd->add_option("--count", cfg.count, "Holdout convex samples per n (0 skips)");
  add_format(estimate_cmd);

  auto* sharp_cmd = app.add_subcommand("sharpness", "Ratio along curves into the regular polygon");
  sharp_cmd->add_option("--n", cfg.n_spec, "Polygon sizes");
  sharp_cmd->add_option("--count", cfg.count, "Tangent directions per n (default 20)");
  sharp_cmd->add_option("--tol", cfg.tol, "Relative tolerance at the smallest t (default 0.02)");
  add_format(sharp_cmd);

  auto* spectral_cmd = app.add_subcommand("spectral", "Circulant spectrum and coercivity on Z");
  spectral_cmd->add_option("--n", cfg.n_spec, "Polygon sizes");
  add_format(spectral_cmd);

  auto* deriv_cmd = app.add_subcommand("derivatives", "Finite differences against closed forms");
  deriv_cmd->add_option("--n", cfg.n_spec, "Polygon sizes");
  deriv_cmd->add_option("--tol", cfg.tol, "Relative Hessian tolerance (default 1e-5)");
  add_format(deriv_cmd);

  auto* convex_cmd = app.add_subcommand("convexify", "Pocket flips until convex");
  convex_cmd->add_option("--input", cfg.input, "Polygon CSV")->required();
  convex_cmd->add_option("--max-flips", cfg.max_flips, "Flip budget")->check(CLI::PositiveNumber);
  convex_cmd->add_option("--trace", cfg.trace, "Write per-flip records as JSON lines");
  add_format(convex_cmd);

  auto* scaling_cmd = app.add_subcommand("scaling", "Dilation laws and the unbounded angle ratio");
  scaling_cmd->add_option("--input", cfg.input, "Polygon CSV (default: 2 x 1 rectangle)");
  scaling_cmd->add_option("--alpha", cfg.alpha_spec, "Comma-separated dilation factors");
  scaling_cmd->add_option("--tol", cfg.tol, "Relative tolerance (default 1e-12)");
  add_format(scaling_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitInputError;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  static const std::vector<std::pair<std::string, std::function<detail::Output(const RunConfig&)>>> table{
      {"verify", detail::run_verify},           {"sample", detail::run_sample},
      {"estimate-cn", detail::run_estimate_cn}, {"sharpness", detail::run_sharpness},
      {"spectral", detail::run_spectral},       {"derivatives", detail::run_derivatives},
      {"convexify", detail::run_convexify},     {"scaling", detail::run_scaling},
  };

  try {
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& e) { return e.first == cfg.subcommand; });
    const detail::Output result = it->second(cfg);
    if (cfg.out.empty()) {
      out << result.text;
    } else {
      std::ofstream f(cfg.out, std::ios::binary);
      if (!f) throw Error(ErrorCode::ParseError, "cannot open " + cfg.out);
      f << result.text;
    }
    return result.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? kExitInputError : kExitCheckFailed;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("polyiso");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace polyiso::cli
