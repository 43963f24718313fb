// finsler: command-line front end.
//
// Exit codes: 0 success, 1 failed check or numerical failure, 2 spec, parse
// or usage error, 3 chart violation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "finsler/report.hpp"
#include "finsler/suites.hpp"

using namespace finsler;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitSpec = 2;
constexpr int kExitChart = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::SpecError:
    case ErrorCode::LexError:
    case ErrorCode::ParseError:
    case ErrorCode::ArityError:
    case ErrorCode::UnboundVariable:
    case ErrorCode::BadConfig:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DimensionError:
      return kExitSpec;
    case ErrorCode::OutOfChart:
    case ErrorCode::ChartExit:
      return kExitChart;
    default:
      return kExitCheckFailed;
  }
}

[[noreturn]] void usage_fail(const std::string& msg) { throw Error(ErrorCode::BadConfig, msg); }

std::vector<double> parse_vector(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_fail("cannot read " + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) usage_fail(what + " is empty");
  return out;
}

void require_dim(const std::vector<double>& v, int n, const std::string& what) {
  if (static_cast<int>(v.size()) != n)
    usage_fail(what + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `text` to `path`, or to stdout when `path` is empty.
void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write '" + path + "'");
  out << text;
}

Json header(const std::string& command, std::uint64_t seed, const Tolerances& tol, const MetricSpec& spec) {
  Json j;
  j["tool"] = Json{{"name", kToolName}, {"version", kToolVersion}};
  j["command"] = command;
  j["seed"] = seed;
  j["tolerances"] = to_json(tol);
  j["metric"] = to_json(spec);
  return j;
}

std::vector<PointState> load_points(const std::string& path, const MetricInstance& m) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SpecError, "cannot open points file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SpecError, "points file '" + path + "' is not valid JSON: " + e.what());
  }
  const Json& list = doc.is_object() && doc.contains("points") ? doc["points"] : doc;
  if (!list.is_array()) throw Error(ErrorCode::SpecError, "points file must hold an array of {x, y} objects");
  std::vector<PointState> out;
  for (const auto& p : list) {
    if (!p.is_object() || !p.contains("x") || !p.contains("y"))
      throw Error(ErrorCode::SpecError, "each point needs 'x' and 'y'");
    PointState s;
    try {
      s.x = p["x"].get<std::vector<double>>();
      s.y = p["y"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::SpecError, "point coordinates must be numbers");
    }
    if (static_cast<int>(s.x.size()) != m.dimension() || static_cast<int>(s.y.size()) != m.dimension())
      throw Error(ErrorCode::SpecError, "point dimension does not match the metric");
    m.require_in_chart(s.x);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorCode::SpecError, "points file holds no points");
  return out;
}

std::vector<PointState> sampled_states(const MetricInstance& m, int count, std::uint64_t seed) {
  std::vector<PointState> out;
  for (auto& s : sample_points(m, count, seed)) out.push_back(PointState{std::move(s.x), std::move(s.y)});
  return out;
}

Json undefined_fit(const Error& e) { return Json{{"status", "undefined"}, {"residual", nullptr}, {"reason", e.what()}}; }

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string spec, points, out;
  int samples = 5;
  std::uint64_t seed = 1;
  Tolerances tol{};
  bool full = false, classify = false, checks = false;
};

int cmd_report(const ReportArgs& a) {
  const MetricSpec spec = load_metric_spec(a.spec);
  const MetricInstance m = build_metric(spec);
  const std::vector<PointState> pts = a.points.empty() ? sampled_states(m, a.samples, a.seed) : load_points(a.points, m);

  Json doc = header("report", a.seed, a.tol, spec);
  doc["points_source"] = a.points.empty() ? Json{{"sampled", a.samples}} : Json{{"file", a.points}};
  Json points = Json::array();
  for (const auto& p : pts) {
    FieldEngine e(m, p, jet_order::kBianchi);
    Json pj = to_json(compute_bundle(e, a.tol), a.full);
    try {
      pj["relative_stretch"] = to_json(fit_relative_stretch(m, p, a.tol.zero));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::UndefinedFit) throw;
      pj["relative_stretch"] = undefined_fit(err);
    }
    if (m.dimension() == 2) {
      pj["berwald_frame"] = to_json(berwald_frame(m, p));
    } else {
      try {
        pj["semi_c"] = to_json(fit_semi_c_reducible(m, p));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::RiemannianPoint && err.code() != ErrorCode::UndefinedFit) throw;
        pj["semi_c"] = undefined_fit(err);
      }
    }
    points.push_back(std::move(pj));
  }
  doc["points"] = points;

  Json fits;
  try {
    const RelativeStretchFit f = fit_relative_stretch(m, pts, a.tol.zero);
    fits["relative_stretch"] = to_json(f);
    fits["relative_stretch"]["constant"] = f.spread <= a.tol.fit_spread;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::UndefinedFit) throw;
    fits["relative_stretch"] = undefined_fit(err);
  }
  doc["fits"] = fits;

  doc["verdicts"] = a.classify ? to_json(classify(m, a.samples, a.seed)) : Json(nullptr);

  Json checks = Json::array();
  if (a.checks) {
    try {
      checks.push_back(to_json(check_constant_flag_chain(m, pts, a.tol.identity, a.tol.fit_spread)));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NotConstantCurvature) throw;
      checks.push_back(Json{{"id", "constant-flag-chain"}, {"verdict", "not-applicable"}, {"reason", err.what()}});
    }
  }
  doc["checks"] = checks;

  emit(doc.dump(2) + "\n", a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string spec, suite, out;
  SuiteOptions opts{};
  std::optional<double> c;
};

int cmd_verify(VerifyArgs a) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), a.suite) == names.end()) usage_fail("unknown suite '" + a.suite + "'");
  const MetricSpec spec = load_metric_spec(a.spec);
  const MetricInstance m = build_metric(spec);
  a.opts.c = a.c;
  const SuiteResult r = run_suite(m, a.suite, a.opts);

  std::ostringstream csv;
  csv << "suite,check,point,residual,tolerance,pass,note\n";
  int failed = 0;
  for (const auto& row : r.rows) {
    csv << r.suite << ',' << row.check << ',' << row.point << ',' << fmt(row.residual) << ',' << fmt(row.tolerance)
        << ',' << (row.pass ? "true" : "false") << ",\"" << row.note << "\"\n";
    if (!row.pass) ++failed;
  }

  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-30s %6s %12s %10s %s\n", "check", "point", "residual", "tolerance", "result");
  table << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-30s %6d %12.3e %10.1e %s", row.check.c_str(), row.point, row.residual,
                  row.tolerance, row.pass ? "ok" : "FAIL");
    table << line;
    if (!row.note.empty()) table << "  (" << row.note << ")";
    table << '\n';
  }
  for (const auto& [k, v] : r.parameters) table << k << " = " << fmt(v) << '\n';
  table << "suite " << r.suite << ": " << (r.pass ? "PASS" : "FAIL") << " (" << failed << " of " << r.rows.size()
        << " rows failed)\n";

  if (!a.out.empty()) emit(csv.str(), a.out);
  std::cout << table.str();
  return r.pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

ClassThresholds parse_thresholds(const std::string& text) {
  ClassThresholds t;
  if (text.empty()) return t;
  if (text.find('=') == std::string::npos) {
    const double v = parse_vector(text, "--thresholds").at(0);
    t.riemannian = t.berwald = t.landsberg = t.weak_landsberg = t.stretch = t.r_quadratic = t.weak_berwald = v;
    return t;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) usage_fail("threshold entries look like name=value");
    const std::string name = item.substr(0, eq);
    const double v = parse_vector(item.substr(eq + 1), "threshold " + name).at(0);
    if (name == "riemannian") t.riemannian = v;
    else if (name == "berwald") t.berwald = v;
    else if (name == "landsberg") t.landsberg = v;
    else if (name == "weak_landsberg") t.weak_landsberg = v;
    else if (name == "stretch") t.stretch = v;
    else if (name == "r_quadratic") t.r_quadratic = v;
    else if (name == "weak_berwald") t.weak_berwald = v;
    else if (name == "chain_inflation") t.chain_inflation = v;
    else usage_fail("unknown threshold '" + name + "'");
  }
  return t;
}

struct ClassifyArgs {
  std::string spec, thresholds, out;
  int samples = 20;
  std::uint64_t seed = 1;
};

int cmd_classify(const ClassifyArgs& a) {
  const ClassThresholds th = parse_thresholds(a.thresholds);
  const MetricSpec spec = load_metric_spec(a.spec);
  const MetricInstance m = build_metric(spec);
  const ClassificationVerdict v = classify(m, a.samples, a.seed, th);
  Json doc = header("classify", a.seed, Tolerances{}, spec);
  doc["samples"] = a.samples;
  doc["verdict"] = to_json(v);
  emit(doc.dump(2) + "\n", a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ParallelogramArgs {
  std::vector<double> u, v, w, eps;
  std::optional<std::vector<double>> support;
};

ParallelogramArgs parse_parallelogram(const std::string& text, int n) {
  ParallelogramArgs p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) usage_fail("--parallelogram entries look like key=a,b,...");
    const std::string key = item.substr(0, eq);
    std::vector<double> vals = parse_vector(item.substr(eq + 1), "--parallelogram " + key);
    if (key == "u") p.u = vals;
    else if (key == "v") p.v = vals;
    else if (key == "w") p.w = vals;
    else if (key == "eps") p.eps = vals;
    else if (key == "support") p.support = vals;
    else usage_fail("unknown --parallelogram key '" + key + "'");
  }
  require_dim(p.u, n, "parallelogram u");
  require_dim(p.v, n, "parallelogram v");
  require_dim(p.w, n, "parallelogram w");
  if (p.support) require_dim(*p.support, n, "parallelogram support");
  if (p.eps.empty()) usage_fail("--parallelogram needs eps");
  for (double e : p.eps)
    if (!(e > 0)) usage_fail("parallelogram eps must be positive");
  return p;
}

TransportMode parse_mode(const std::string& s) {
  if (s == "supported") return TransportMode::Supported;
  if (s == "transported") return TransportMode::Transported;
  if (s == "curve-velocity") return TransportMode::CurveVelocity;
  usage_fail("unknown transport mode '" + s + "'");
}

struct GeodesicArgs {
  std::string spec, x0, y0, flows, parallelogram, mode = "supported", csv, summary, experiment_csv;
  double t = 1.0;
  int samples = 50;
  bool unit_speed = false;
  std::optional<double> c;
};

int cmd_geodesic(const GeodesicArgs& a) {
  const MetricSpec spec = load_metric_spec(a.spec);
  const MetricInstance m = build_metric(spec);
  const int n = m.dimension();
  const std::vector<double> x0 = parse_vector(a.x0, "--x0"), y0 = parse_vector(a.y0, "--y0");
  require_dim(x0, n, "--x0");
  require_dim(y0, n, "--y0");
  std::vector<std::string> quantities;
  if (!a.flows.empty()) {
    std::stringstream ss(a.flows);
    std::string q;
    while (std::getline(ss, q, ',')) quantities.push_back(q);
  }
  std::optional<ParallelogramArgs> para;
  if (!a.parallelogram.empty()) para = parse_parallelogram(a.parallelogram, n);
  const TransportMode mode = parse_mode(a.mode);
  m.require_in_chart(x0);

  Json summary = header("geodesic", 0, Tolerances{}, spec);
  summary.erase("seed");
  summary["x0"] = x0;
  summary["y0"] = y0;
  summary["t"] = a.t;

  IntegratorOptions io;
  io.samples = a.samples;
  const GeodesicSolution geod = integrate_geodesic(m, x0, y0, a.t, io, a.unit_speed);
  summary["geodesic"] = summary_json(geod);

  std::optional<ScalarFlow> flow;
  if (!quantities.empty()) {
    std::optional<double> c = a.c;
    std::string c_source = c ? "option" : "fit";
    if (!c) {
      try {
        c = fit_relative_stretch(m, PointState{x0, y0}).c;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::UndefinedFit) throw;
        c_source = "undefined";
      }
    }
    flow = scalar_flows(m, geod, quantities, c);
    Json status = Json::object();
    for (const auto& [k, v] : flow->status) status[k] = v;
    summary["flows"] = Json{{"quantities", quantities}, {"c", c ? number(*c) : Json(nullptr)}, {"c_source", c_source},
                            {"status", status}};
  }

  if (para) {
    const ParallelogramExperiment ex =
        parallelogram_holonomy(m, x0, para->u, para->v, para->w, para->eps, mode, para->support, IntegratorOptions{});
    summary["parallelogram"] = to_json(ex);
    if (!a.experiment_csv.empty()) {
      std::ostringstream pc;
      pc << "eps,defect\n";
      for (std::size_t k = 0; k < ex.eps.size(); ++k) pc << fmt(ex.eps[k]) << ',' << fmt(ex.defect[k]) << '\n';
      emit(pc.str(), a.experiment_csv);
    }
  }

  static const char* kOrder[] = {"F",   "phi",    "phi_dot", "phi_law_residual", "phi_half_law_residual", "L_norm",
                                 "mu",  "mu_dot", "p",       "p_dot",            "c",                     "c_dot"};
  std::vector<std::string> cols;
  if (flow)
    for (const char* k : kOrder)
      if (flow->columns.count(k)) cols.push_back(k);

  std::ostringstream csv;
  csv << 't';
  for (int i = 1; i <= n; ++i) csv << ",x" << i;
  for (int i = 1; i <= n; ++i) csv << ",y" << i;
  for (const auto& c : cols) csv << ',' << c;
  csv << '\n';
  for (std::size_t k = 0; k < geod.times.size(); ++k) {
    csv << fmt(geod.times[k]);
    for (double v : geod.x[k]) csv << ',' << fmt(v);
    for (double v : geod.v[k]) csv << ',' << fmt(v);
    for (const auto& c : cols) csv << ',' << fmt(flow->columns.at(c)[k]);
    csv << '\n';
  }

  const std::string summary_text = summary.dump(2) + "\n";
  emit(csv.str(), a.csv);
  if (!a.summary.empty()) emit(summary_text, a.summary);
  else if (!a.csv.empty()) std::cout << summary_text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string spec, out;
  int samples = 20;
  std::uint64_t seed = 1;
  double tol = 1e-10;
};

int cmd_validate(const ValidateArgs& a) {
  const MetricSpec spec = load_metric_spec(a.spec);
  const MetricInstance m = build_metric(spec);
  const ValidationReport r = validate(m, a.samples, a.seed, a.tol);
  Json doc = header("validate", a.seed, Tolerances{}, spec);
  doc["validation"] = to_json(r);
  emit(doc.dump(2) + "\n", a.out);
  return r.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical Finsler curvature engine"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Curvature bundles, fits and verdicts as JSON");
  report->add_option("spec", ra.spec, "Metric spec file")->required();
  report->add_option("--points", ra.points, "JSON file with explicit {x, y} points");
  report->add_option("--samples", ra.samples, "Number of sampled points")->check(CLI::PositiveNumber);
  report->add_option("--seed", ra.seed, "Sampling seed");
  report->add_option("--tol", ra.tol.identity, "Identity tolerance");
  report->add_option("--fit-spread", ra.tol.fit_spread, "Allowed spread of fitted scalars");
  report->add_flag("--full-tensors", ra.full, "Include all tensor components");
  report->add_flag("--classify", ra.classify, "Include a classification verdict");
  report->add_flag("--checks", ra.checks, "Include the constant-flag-curvature chain check");
  report->add_option("--out", ra.out, "Output path (default stdout)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run a verification suite; exit 0 iff every check passes");
  verify->add_option("spec", va.spec, "Metric spec file")->required();
  verify->add_option("--suite", va.suite, "identities | bianchi | landsberg-routes | constant-flag | theorem3 | flows")
      ->required();
  verify->add_option("--samples", va.opts.samples, "Number of sampled points")->check(CLI::PositiveNumber);
  verify->add_option("--seed", va.opts.seed, "Sampling seed");
  verify->add_option("--tol", va.opts.tol.identity, "Identity tolerance");
  verify->add_option("--fit-spread", va.opts.tol.fit_spread, "Allowed spread of fitted scalars");
  verify->add_option("--geodesics", va.opts.geodesics, "Trajectories for geodesic suites")->check(CLI::PositiveNumber);
  verify->add_option("--t", va.opts.t_end, "Unit-speed length of trajectories");
  verify->add_option("--c", va.c, "Relative-stretch ratio used instead of the fitted one");
  verify->add_option("--out", va.out, "Residual table as CSV");

  ClassifyArgs ca;
  auto* cls = app.add_subcommand("classify", "Classification verdict as JSON");
  cls->add_option("spec", ca.spec, "Metric spec file")->required();
  cls->add_option("--samples", ca.samples, "Number of sampled points")->check(CLI::PositiveNumber);
  cls->add_option("--seed", ca.seed, "Sampling seed");
  cls->add_option("--thresholds", ca.thresholds, "One value for all flags, or name=value,...");
  cls->add_option("--out", ca.out, "Output path (default stdout)");

  GeodesicArgs ga;
  auto* geo = app.add_subcommand("geodesic", "Geodesic time series as CSV plus a JSON summary");
  geo->add_option("spec", ga.spec, "Metric spec file")->required();
  geo->add_option("--x0", ga.x0, "Initial point, comma separated")->required();
  geo->add_option("--y0", ga.y0, "Initial velocity, comma separated")->required();
  geo->add_option("--t", ga.t, "Final time (negative integrates backwards)");
  geo->add_option("--samples", ga.samples, "Uniform time intervals in the output")->check(CLI::PositiveNumber);
  geo->add_flag("--unit-speed", ga.unit_speed, "Rescale y0 to F = 1");
  geo->add_option("--flows", ga.flows, "Scalars along the curve: phi,L_norm,mu,p,c");
  geo->add_option("--c", ga.c, "Relative-stretch ratio for the phi law (default: fitted at x0, y0)");
  geo->add_option("--parallelogram", ga.parallelogram, "u=..;v=..;w=..;eps=..[;support=..]");
  geo->add_option("--mode", ga.mode, "Parallelogram transport: supported | transported | curve-velocity");
  geo->add_option("--csv", ga.csv, "Time-series CSV path (default stdout)");
  geo->add_option("--summary", ga.summary, "JSON summary path");
  geo->add_option("--experiment-csv", ga.experiment_csv, "Parallelogram eps/defect CSV path");

  ValidateArgs vla;
  auto* val = app.add_subcommand("validate", "Check homogeneity and strong convexity on samples");
  val->add_option("spec", vla.spec, "Metric spec file")->required();
  val->add_option("--samples", vla.samples, "Number of sampled points")->check(CLI::PositiveNumber);
  val->add_option("--seed", vla.seed, "Sampling seed");
  val->add_option("--tol", vla.tol, "Homogeneity tolerance");
  val->add_option("--out", vla.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitSpec;
  }

  try {
    if (*report) return cmd_report(ra);
    if (*verify) return cmd_verify(va);
    if (*cls) return cmd_classify(ca);
    if (*geo) return cmd_geodesic(ga);
    if (*val) return cmd_validate(vla);
  } catch (const ChartExitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitChart;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitSpec;
}
