#include "finsler/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace finsler {

namespace {

[[noreturn]] void spec_fail(const std::string& msg) { throw Error(ErrorCode::SpecError, msg); }

std::string number_source(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string expr_source(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return number_source(v.get<double>());
  spec_fail("'" + key + "' entries must be strings or numbers");
}

std::vector<double> number_list(const Json& v, const std::string& key) {
  if (!v.is_array()) spec_fail("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) spec_fail("'" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Chart chart_from_json(const Json& c) {
  if (!c.is_object()) spec_fail("'chart' must be an object");
  Chart chart;
  const std::string type = c.value("type", std::string("whole"));
  if (type == "whole") {
    chart.kind = Chart::Kind::Whole;
  } else if (type == "ball") {
    chart.kind = Chart::Kind::Ball;
    if (c.contains("radius")) {
      if (!c["radius"].is_number()) spec_fail("'chart.radius' must be a number");
      chart.radius = c["radius"].get<double>();
    }
    if (!(chart.radius > 0)) spec_fail("'chart.radius' must be positive");
    chart.sample_radius = 0.5 * chart.radius;
  } else if (type == "box") {
    chart.kind = Chart::Kind::Box;
    if (!c.contains("lower") || !c.contains("upper")) spec_fail("box chart needs 'lower' and 'upper'");
    chart.lower = number_list(c["lower"], "chart.lower");
    chart.upper = number_list(c["upper"], "chart.upper");
  } else {
    spec_fail("unknown chart type '" + type + "'");
  }
  if (c.contains("sample_radius")) {
    if (!c["sample_radius"].is_number()) spec_fail("'chart.sample_radius' must be a number");
    chart.sample_radius = c["sample_radius"].get<double>();
    if (!(chart.sample_radius > 0)) spec_fail("'chart.sample_radius' must be positive");
  }
  return chart;
}

Json tensor_summary(const TensorBlock& t) { return Json{{"max_abs", number(max_abs(t))}, {"frobenius", number(frobenius(t))}}; }

}  // namespace

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

MetricSpec metric_spec_from_json(const Json& doc) {
  if (!doc.is_object()) spec_fail("metric spec must be a JSON object");
  static const std::vector<std::string> known = {"dimension", "family", "a",      "b",     "funk_a",
                                                 "expression", "params", "chart", "name", "description"};
  for (const auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) spec_fail("unknown key '" + key + "'");

  MetricSpec spec;
  if (!doc.contains("dimension") || !doc["dimension"].is_number_integer()) spec_fail("'dimension' must be an integer");
  spec.dimension = doc["dimension"].get<int>();
  if (!doc.contains("family") || !doc["family"].is_string()) spec_fail("'family' must be a string");
  const std::string family = doc["family"].get<std::string>();
  if (family == "riemannian") spec.family = MetricFamily::Riemannian;
  else if (family == "randers") spec.family = MetricFamily::Randers;
  else if (family == "funk") spec.family = MetricFamily::Funk;
  else if (family == "custom") spec.family = MetricFamily::Custom;
  else spec_fail("unknown family '" + family + "'");

  if (doc.contains("a")) {
    const Json& a = doc["a"];
    if (!a.is_array()) spec_fail("'a' must be a matrix");
    for (const auto& row : a) {
      if (!row.is_array()) spec_fail("'a' must be a matrix");
      std::vector<std::string> r;
      for (const auto& e : row) r.push_back(expr_source(e, "a"));
      spec.a.push_back(std::move(r));
    }
  }
  if (doc.contains("b")) {
    if (!doc["b"].is_array()) spec_fail("'b' must be an array");
    for (const auto& e : doc["b"]) spec.b.push_back(expr_source(e, "b"));
  }
  if (doc.contains("funk_a")) spec.funk_a = number_list(doc["funk_a"], "funk_a");
  if (doc.contains("expression")) {
    if (!doc["expression"].is_string()) spec_fail("'expression' must be a string");
    spec.expression = doc["expression"].get<std::string>();
  }
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) spec_fail("'params' must be an object");
    for (const auto& [name, v] : doc["params"].items()) {
      if (v.is_number()) spec.scalar_params[name] = v.get<double>();
      else spec.vector_params[name] = number_list(v, "params." + name);
    }
  }
  if (doc.contains("chart")) spec.chart = chart_from_json(doc["chart"]);

  if (spec.family == MetricFamily::Riemannian || spec.family == MetricFamily::Randers) {
    if (spec.a.empty()) spec_fail("'a' is required for family '" + family + "'");
  }
  if (spec.family == MetricFamily::Randers && spec.b.empty()) spec_fail("'b' is required for family 'randers'");
  if (spec.family == MetricFamily::Funk && !doc.contains("funk_a")) spec.funk_a.assign(spec.dimension > 0 ? spec.dimension : 0, 0.0);
  if (spec.family == MetricFamily::Custom && spec.expression.empty()) spec_fail("'expression' is required for family 'custom'");
  return spec;
}

MetricSpec load_metric_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) spec_fail("cannot open metric spec '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    spec_fail("'" + path + "' is not valid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return metric_spec_from_json(doc);
}

Json to_json(const MetricSpec& spec) {
  Json j;
  j["dimension"] = spec.dimension;
  j["family"] = std::string(to_string(spec.family));
  if (!spec.a.empty()) j["a"] = spec.a;
  if (!spec.b.empty()) j["b"] = spec.b;
  if (spec.family == MetricFamily::Funk) j["funk_a"] = spec.funk_a;
  if (!spec.expression.empty()) j["expression"] = spec.expression;
  if (!spec.scalar_params.empty() || !spec.vector_params.empty()) {
    Json p = Json::object();
    for (const auto& [k, v] : spec.scalar_params) p[k] = v;
    for (const auto& [k, v] : spec.vector_params) p[k] = v;
    j["params"] = p;
  }
  if (spec.chart) {
    const Chart& c = *spec.chart;
    Json cj;
    switch (c.kind) {
      case Chart::Kind::Whole: cj["type"] = "whole"; break;
      case Chart::Kind::Ball:
        cj["type"] = "ball";
        cj["radius"] = c.radius;
        break;
      case Chart::Kind::Box:
        cj["type"] = "box";
        cj["lower"] = c.lower;
        cj["upper"] = c.upper;
        break;
    }
    cj["sample_radius"] = c.sample_radius;
    j["chart"] = cj;
  }
  return j;
}

Json to_json(const TensorBlock& t) {
  Json valence = Json::array();
  for (Slot s : t.valence()) valence.push_back(s == Slot::Upper ? "upper" : "lower");
  Json data = Json::array();
  for (double v : t.data()) data.push_back(number(v));
  return Json{{"dim", t.dim()}, {"valence", valence}, {"symmetries", t.symmetries}, {"data", data}};
}

Json to_json(const PointState& p) { return Json{{"x", p.x}, {"y", p.y}}; }

Json to_json(const CurvatureBundle& b, bool full) {
  Json j;
  j["point"] = to_json(b.point);
  j["F"] = number(b.F);
  const std::pair<const char*, const TensorBlock*> blocks[] = {
      {"g", &b.g},         {"g_inv", &b.g_inv}, {"h", &b.h},   {"C", &b.C},       {"I", &b.I},
      {"G", &b.G},         {"N", &b.N},         {"Gamma", &b.Gamma}, {"B", &b.B}, {"E", &b.E},
      {"R1", &b.R1},       {"R", &b.R},         {"L", &b.L},   {"J", &b.J},       {"Sigma", &b.Sigma}};
  Json norms;
  for (const auto& [name, t] : blocks) norms[name] = tensor_summary(*t);
  j["norms"] = norms;
  j["route_residuals"] = Json{{"landsberg", number(b.landsberg_route_residual)},
                              {"mean_landsberg", number(b.mean_landsberg_route_residual)},
                              {"stretch_bianchi", number(b.stretch_bianchi_residual)},
                              {"stretch_antisymmetry", number(b.stretch_antisymmetry_residual)}};
  if (full) {
    Json t;
    for (const auto& [name, blk] : blocks) t[name] = to_json(*blk);
    j["tensors"] = t;
  }
  return j;
}

Json to_json(const ValidationReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples)
    samples.push_back(Json{{"x", s.x},
                           {"y", s.y},
                           {"lambda", s.lambda},
                           {"homogeneity_residual", number(s.homogeneity_residual)},
                           {"min_eigenvalue", number(s.min_eigenvalue)},
                           {"euler_residual", number(s.euler_residual)},
                           {"ok", s.ok}});
  Json j{{"pass", r.pass},
         {"tolerance", r.tolerance},
         {"max_homogeneity_residual", number(r.max_homogeneity_residual)},
         {"min_eigenvalue", number(r.min_eigenvalue)},
         {"first_failure", r.first_failure ? Json(*r.first_failure) : Json(nullptr)},
         {"samples", samples}};
  return j;
}

Json to_json(const ClassificationVerdict& v) {
  Json flags;
  for (const auto& [name, f] : v.flags)
    flags[name] = Json{{"value", f.value}, {"residual", number(f.residual)}, {"threshold", f.threshold}};
  Json points = Json::array();
  for (const auto& p : v.points) points.push_back(to_json(p));
  return Json{{"flags", flags}, {"seed", v.seed}, {"chain_violations", v.chain_violations}, {"points", points}};
}

Json to_json(const RelativeStretchFit& f) {
  Json per = Json::array();
  for (double c : f.per_point) per.push_back(number(c));
  return Json{{"status", "ok"},
              {"c", number(f.c)},
              {"residual", number(f.residual)},
              {"spread", number(f.spread)},
              {"design_norm", number(f.design_norm)},
              {"sigma_norm", number(f.sigma_norm)},
              {"sign_label", f.sign_label},
              {"per_point", per}};
}

Json to_json(const SemiCFit& f) {
  return Json{{"status", "ok"},
              {"p", number(f.p)},
              {"q", number(f.q)},
              {"residual", number(f.residual)},
              {"I_norm2", number(f.I_norm2)}};
}

Json to_json(const BerwaldFrame2D& f) {
  return Json{{"ell", f.ell},
              {"m", f.m},
              {"I_scalar", number(f.I_scalar)},
              {"mu", f.mu ? number(*f.mu) : Json(nullptr)},
              {"I_vert", number(f.I_vert)},
              {"residual", number(f.reconstruction_residual)},
              {"frame_residual", number(f.frame_residual)},
              {"landsberg_residual", f.landsberg_residual ? number(*f.landsberg_residual) : Json(nullptr)}};
}

Json to_json(const TheoremCheckResult& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = number(v);
  Json res = Json::object();
  for (const auto& [k, v] : r.residuals) res[k] = number(v);
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json vals = Json::object();
    for (const auto& [k, v] : s.values) vals[k] = number(v);
    samples.push_back(Json{{"t", number(s.t)}, {"residual", number(s.residual)}, {"status", s.status}, {"values", vals}});
  }
  return Json{{"id", r.id},
              {"verdict", r.verdict},
              {"pass", r.pass},
              {"residual", number(r.residual)},
              {"tolerance", r.tolerance},
              {"parameters", params},
              {"residuals", res},
              {"samples", samples}};
}

Json to_json(const ParallelogramExperiment& e) {
  Json defect = Json::array();
  for (double d : e.defect) defect.push_back(number(d));
  return Json{{"mode", std::string(to_string(e.mode))},
              {"x0", e.x0},
              {"u", e.u},
              {"v", e.v},
              {"w0", e.w0},
              {"support0", e.support0},
              {"eps", e.eps},
              {"defect", defect},
              {"exponent", e.exponent ? number(*e.exponent) : Json(nullptr)},
              {"reversal_residual", number(e.reversal_residual)}};
}

Json summary_json(const GeodesicSolution& g) {
  return Json{{"samples", g.times.size()},
              {"t_end", g.times.empty() ? Json(0.0) : number(g.times.back())},
              {"F0", number(g.F0)},
              {"max_drift", number(g.max_drift)},
              {"unit_speed", g.unit_speed},
              {"accepted_steps", g.accepted},
              {"rejected_steps", g.rejected}};
}

Json to_json(const Tolerances& t) {
  return Json{{"identity", t.identity}, {"floor", t.floor}, {"zero", t.zero}, {"fit_spread", t.fit_spread}};
}

}  // namespace finsler
