#pragma once

// JSON formats: shape graphs, match configuration, results and per-stage
// checkpoints. Doubles are written in shortest round-trip form (at most 17
// significant digits), so write -> read reproduces every value exactly.

#include "sge/graphcore.hpp"
#include "sge/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>

namespace sge {

using Json = nlohmann::json;

inline constexpr int result_format_version = 1;
inline constexpr int checkpoint_format_version = 1;

using AnyShapeGraph = std::variant<ShapeGraphSpec<2>, ShapeGraphSpec<3>>;

namespace detail {

inline Error input_error(const std::string& where, const std::string& what) {
  return Error(ErrorCategory::input, where.empty() ? what : where + ": " + what);
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw input_error(where, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) throw input_error(where, "unknown key \"" + key + "\"");
}

inline double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw input_error(where, "expected a number");
  return j.get<double>();
}

inline int get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw input_error(where, "expected an integer");
  return j.get<int>();
}

template <int Dim>
Vec<Dim> get_point(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != Dim)
    throw input_error(where, "expected a point with " + std::to_string(Dim) + " coordinates");
  Vec<Dim> v;
  for (int d = 0; d < Dim; ++d) v[d] = get_number(j[d], where);
  return v;
}

template <int Dim>
Json point_json(const Vec<Dim>& v) {
  Json p = Json::array();
  for (int d = 0; d < Dim; ++d) p.push_back(v[d]);
  return p;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCategory::input, path + ": " + e.what());
  }
}

}  // namespace detail

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::input, "cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCategory::input, "failed writing " + path);
}

// ---------------------------------------------------------------------------
// Shape graphs

template <int Dim>
Json shape_graph_json(const ShapeGraphSpec<Dim>& spec) {
  Json j;
  j["dim"] = Dim;
  j["components"] = Json::array();
  for (const auto& c : spec.components) {
    Json pts = Json::array();
    for (const auto& v : c.vertices) pts.push_back(detail::point_json<Dim>(v));
    j["components"].push_back(std::move(pts));
  }
  j["adjacency"] = spec.adjacency.data();
  if (!spec.weights.empty()) j["weights"] = spec.weights;
  return j;
}

/// Without an "adjacency" entry, endpoints closer than junction_epsilon
/// (default: 1e-6 x diameter) are glued.
template <int Dim>
ShapeGraphSpec<Dim> parse_shape_graph_as(const Json& j, const std::string& where,
                                         double junction_epsilon = -1.0) {
  detail::reject_unknown(j, {"dim", "components", "adjacency", "weights"}, where);
  if (!j.contains("components") || !j["components"].is_array() || j["components"].empty())
    throw detail::input_error(where, "\"components\" must be a non-empty array");
  std::vector<Polyline<Dim>> soup;
  for (std::size_t k = 0; k < j["components"].size(); ++k) {
    const auto& c = j["components"][k];
    const std::string at = where + ": component " + std::to_string(k);
    if (!c.is_array()) throw detail::input_error(at, "expected an array of points");
    Polyline<Dim> poly;
    for (const auto& p : c) poly.push_back(detail::get_point<Dim>(p, at));
    soup.push_back(std::move(poly));
  }

  ShapeGraphSpec<Dim> spec;
  if (j.contains("adjacency")) {
    for (auto& poly : soup) spec.components.push_back({std::move(poly)});
    const auto& a = j["adjacency"];
    if (!a.is_array()) throw detail::input_error(where, "\"adjacency\" must be an array of rows");
    std::vector<std::vector<int>> rows;
    for (const auto& r : a) {
      if (!r.is_array()) throw detail::input_error(where, "adjacency rows must be arrays");
      std::vector<int> row;
      for (const auto& x : r) row.push_back(detail::get_int(x, where + ": adjacency"));
      rows.push_back(std::move(row));
    }
    spec.adjacency = AdjacencyMatrix(std::move(rows));
  } else {
    ShapeGraphSpec<Dim> tmp;
    for (const auto& poly : soup) tmp.components.push_back({poly});
    const double eps = junction_epsilon >= 0.0 ? junction_epsilon : default_junction_epsilon(tmp);
    spec = split_components(soup, eps);
    spec.weights.clear();
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    if (!w.is_array()) throw detail::input_error(where, "\"weights\" must be an array per component");
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!w[k].is_array()) throw detail::input_error(where, "weights of a component must be an array");
      std::vector<double> row;
      for (const auto& x : w[k]) row.push_back(detail::get_number(x, where + ": weights"));
      spec.weights.push_back(std::move(row));
    }
  }
  return spec;
}

inline AnyShapeGraph parse_shape_graph(const Json& j, const std::string& where = "",
                                       double junction_epsilon = -1.0) {
  if (!j.is_object() || !j.contains("dim"))
    throw detail::input_error(where, "missing \"dim\"");
  const int dim = detail::get_int(j["dim"], where + ": dim");
  if (dim == 2) return parse_shape_graph_as<2>(j, where, junction_epsilon);
  if (dim == 3) return parse_shape_graph_as<3>(j, where, junction_epsilon);
  throw detail::input_error(where, "\"dim\" must be 2 or 3");
}

inline AnyShapeGraph read_shape_graph(const std::string& path, double junction_epsilon = -1.0) {
  return parse_shape_graph(detail::read_json_file(path), path, junction_epsilon);
}

template <int Dim>
void write_shape_graph(const std::string& path, const ShapeGraphSpec<Dim>& spec) {
  write_json_file(path, shape_graph_json(spec));
}

/// Throws a validation error carrying the full report.
template <int Dim>
void require_valid(const ShapeGraphSpec<Dim>& spec, double junction_epsilon,
                   const std::string& where) {
  const auto report = validate(spec, junction_epsilon);
  if (!report.ok()) throw Error(ErrorCategory::validation, where + ": " + report.summary());
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  MatchParameters params;
  bool normalize = true;
  double junction_epsilon = -1.0;  // < 0: 1e-6 x diameter
};

inline const char* to_string(MetricVariant v) {
  return v == MetricVariant::constant_coefficient ? "constant_coefficient" : "scale_invariant";
}
inline const char* to_string(ScaleExponentRule r) {
  return r == ScaleExponentRule::dimensional ? "dimensional" : "printed";
}
inline const char* to_string(Orientation o) {
  return o == Orientation::squared ? "squared" : "oriented_exponential";
}

inline RunConfig parse_config(const Json& j, const std::string& where = "config") {
  using detail::get_int;
  using detail::get_number;
  using detail::input_error;
  using detail::reject_unknown;
  RunConfig rc;
  auto& p = rc.params;
  reject_unknown(j, {"metric", "kernel", "lambda", "alpha", "beta_tilde", "clip_epsilon", "spline",
                     "resample_counts", "sfista", "lbfgs", "preconditioner", "normalize", "junction_epsilon"},
                 where);
  if (j.contains("metric")) {
    const auto& m = j["metric"];
    const std::string at = where + ".metric";
    reject_unknown(m, {"coefficients", "variant", "exponent", "immersion_epsilon"}, at);
    if (m.contains("coefficients")) {
      if (!m["coefficients"].is_array()) throw input_error(at, "coefficients must be an array");
      p.metric.coefficients.clear();
      for (const auto& a : m["coefficients"]) p.metric.coefficients.push_back(get_number(a, at));
    }
    if (m.contains("variant")) {
      const auto v = m["variant"].is_string() ? m["variant"].get<std::string>() : "";
      if (v == "constant_coefficient") p.metric.variant = MetricVariant::constant_coefficient;
      else if (v == "scale_invariant") p.metric.variant = MetricVariant::scale_invariant;
      else throw input_error(at, "variant must be \"constant_coefficient\" or \"scale_invariant\"");
    }
    if (m.contains("exponent")) {
      const auto v = m["exponent"].is_string() ? m["exponent"].get<std::string>() : "";
      if (v == "dimensional") p.metric.exponent = ScaleExponentRule::dimensional;
      else if (v == "printed") p.metric.exponent = ScaleExponentRule::printed;
      else throw input_error(at, "exponent must be \"dimensional\" or \"printed\"");
    }
    if (m.contains("immersion_epsilon"))
      p.metric.immersion_epsilon = get_number(m["immersion_epsilon"], at);
  }
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    const std::string at = where + ".kernel";
    reject_unknown(k, {"sigma", "orientation", "tau"}, at);
    if (k.contains("sigma")) p.kernel.sigma = get_number(k["sigma"], at);
    if (k.contains("tau")) p.kernel.tau = get_number(k["tau"], at);
    if (k.contains("orientation")) {
      const auto v = k["orientation"].is_string() ? k["orientation"].get<std::string>() : "";
      if (v == "squared") p.kernel.orientation = Orientation::squared;
      else if (v == "oriented_exponential") p.kernel.orientation = Orientation::oriented_exponential;
      else throw input_error(at, "orientation must be \"squared\" or \"oriented_exponential\"");
    }
  }
  if (j.contains("lambda")) p.lambda = get_number(j["lambda"], where + ".lambda");
  if (j.contains("alpha")) p.alpha = get_number(j["alpha"], where + ".alpha");
  if (j.contains("beta_tilde")) p.penalty.beta_tilde = get_number(j["beta_tilde"], where + ".beta_tilde");
  if (j.contains("clip_epsilon"))
    p.penalty.clip_epsilon = get_number(j["clip_epsilon"], where + ".clip_epsilon");
  if (j.contains("spline")) {
    const auto& s = j["spline"];
    const std::string at = where + ".spline";
    reject_unknown(s, {"time_order", "space_order", "time_controls", "space_controls", "time_nodes",
                       "space_nodes"},
                   at);
    if (s.contains("time_order")) p.spline.time_order = get_int(s["time_order"], at);
    if (s.contains("space_order")) p.spline.space_order = get_int(s["space_order"], at);
    if (s.contains("time_controls")) p.spline.time_controls = get_int(s["time_controls"], at);
    if (s.contains("space_controls")) p.spline.space_controls = get_int(s["space_controls"], at);
    if (s.contains("time_nodes")) p.spline.time_nodes = get_int(s["time_nodes"], at);
    if (s.contains("space_nodes")) p.spline.space_nodes = get_int(s["space_nodes"], at);
    if (p.spline.time_order < 1)
      throw input_error(at, "time_order must be >= 1 (the energy needs a time derivative)");
    if (p.spline.space_order < 2)
      throw input_error(at, "space_order must be >= 2 (the metric needs two space derivatives)");
  }
  if (j.contains("resample_counts")) {
    const auto& r = j["resample_counts"];
    if (!r.is_array()) throw input_error(where + ".resample_counts", "expected an array");
    for (const auto& n : r) p.resample_counts.push_back(get_int(n, where + ".resample_counts"));
  }
  if (j.contains("sfista")) {
    const auto& s = j["sfista"];
    const std::string at = where + ".sfista";
    reject_unknown(s, {"gamma0", "growth", "stages"}, at);
    if (s.contains("gamma0")) p.sfista.gamma0 = get_number(s["gamma0"], at);
    if (s.contains("growth")) p.sfista.growth = get_number(s["growth"], at);
    if (s.contains("stages")) p.sfista.stages = get_int(s["stages"], at);
  }
  if (j.contains("lbfgs")) {
    const auto& l = j["lbfgs"];
    const std::string at = where + ".lbfgs";
    reject_unknown(l, {"memory", "g_tol", "f_tol", "max_iterations", "c1", "c2", "max_line_search"},
                   at);
    if (l.contains("memory")) p.lbfgs.memory = get_int(l["memory"], at);
    if (l.contains("g_tol")) p.lbfgs.g_tol = get_number(l["g_tol"], at);
    if (l.contains("f_tol")) p.lbfgs.f_tol = get_number(l["f_tol"], at);
    if (l.contains("max_iterations")) p.lbfgs.max_iterations = get_int(l["max_iterations"], at);
    if (l.contains("c1")) p.lbfgs.c1 = get_number(l["c1"], at);
    if (l.contains("c2")) p.lbfgs.c2 = get_number(l["c2"], at);
    if (l.contains("max_line_search")) p.lbfgs.max_line_search = get_int(l["max_line_search"], at);
  }
  if (j.contains("preconditioner")) {
    const auto& w = j["preconditioner"];
    const auto v = w.is_string() ? w.get<std::string>() : "";
    if (v == "metric") p.preconditioner = PreconditionerKind::metric;
    else if (v == "none") p.preconditioner = PreconditionerKind::none;
    else throw input_error(where + ".preconditioner", "expected \"metric\" or \"none\"");
  }
  if (j.contains("normalize")) {
    if (!j["normalize"].is_boolean()) throw input_error(where + ".normalize", "expected true or false");
    rc.normalize = j["normalize"].get<bool>();
  }
  if (j.contains("junction_epsilon"))
    rc.junction_epsilon = get_number(j["junction_epsilon"], where + ".junction_epsilon");
  try {
    p.check();
  } catch (const Error& e) {
    throw input_error(where, e.what());
  }
  return rc;
}

inline RunConfig read_config(const std::string& path) {
  return parse_config(detail::read_json_file(path), path);
}

inline Json config_json(const RunConfig& rc) {
  const auto& p = rc.params;
  Json j;
  j["metric"] = {{"coefficients", p.metric.coefficients},
                 {"variant", to_string(p.metric.variant)},
                 {"exponent", to_string(p.metric.exponent)},
                 {"immersion_epsilon", p.metric.immersion_epsilon}};
  j["kernel"] = {{"sigma", p.kernel.sigma},
                 {"orientation", to_string(p.kernel.orientation)},
                 {"tau", p.kernel.tau}};
  j["lambda"] = p.lambda;
  j["alpha"] = p.alpha;
  j["beta_tilde"] = p.penalty.beta_tilde;
  j["clip_epsilon"] = p.penalty.clip_epsilon;
  j["spline"] = {{"time_order", p.spline.time_order},       {"space_order", p.spline.space_order},
                 {"time_controls", p.spline.time_controls}, {"space_controls", p.spline.space_controls},
                 {"time_nodes", p.spline.time_nodes},       {"space_nodes", p.spline.space_nodes}};
  j["resample_counts"] = p.resample_counts;
  j["sfista"] = {{"gamma0", p.sfista.gamma0}, {"growth", p.sfista.growth}, {"stages", p.sfista.stages}};
  j["lbfgs"] = {{"memory", p.lbfgs.memory},
                {"g_tol", p.lbfgs.g_tol},
                {"f_tol", p.lbfgs.f_tol},
                {"max_iterations", p.lbfgs.max_iterations},
                {"c1", p.lbfgs.c1},
                {"c2", p.lbfgs.c2},
                {"max_line_search", p.lbfgs.max_line_search}};
  j["preconditioner"] = p.preconditioner == PreconditionerKind::metric ? "metric" : "none";
  j["normalize"] = rc.normalize;
  if (rc.junction_epsilon >= 0.0) j["junction_epsilon"] = rc.junction_epsilon;
  return j;
}

// ---------------------------------------------------------------------------
// Normalization

/// Common factor bringing the larger of the two graphs to unit diameter.
template <int Dim>
double joint_unit_scale(const ShapeGraphSpec<Dim>& a, const ShapeGraphSpec<Dim>& b) {
  const double d = std::max(diameter(a), diameter(b));
  if (!(d > 0.0)) throw Error(ErrorCategory::validation, "shapes have zero diameter");
  return 1.0 / d;
}

// ---------------------------------------------------------------------------
// Results

inline Json breakdown_json(const EnergyBreakdown& b) {
  return {{"path", b.path},
          {"varifold", b.varifold},
          {"varifold_weighted", b.varifold_weighted},
          {"penalty", b.penalty},
          {"penalty_weighted", b.penalty_weighted},
          {"tv", b.tv},
          {"huber", b.huber},
          {"smoothed_total", b.smoothed_total},
          {"varifold_roundoff", b.varifold_roundoff}};
}

inline EnergyBreakdown parse_breakdown(const Json& j) {
  EnergyBreakdown b;
  b.path = j.at("path").get<double>();
  b.varifold = j.at("varifold").get<double>();
  b.varifold_weighted = j.at("varifold_weighted").get<double>();
  b.penalty = j.at("penalty").get<double>();
  b.penalty_weighted = j.at("penalty_weighted").get<double>();
  b.tv = j.at("tv").get<double>();
  b.huber = j.at("huber").get<double>();
  b.smoothed_total = j.at("smoothed_total").get<double>();
  b.varifold_roundoff = j.at("varifold_roundoff").get<double>();
  return b;
}

inline Json stage_json(const StageReport& s) {
  Json trace = Json::array();
  for (const auto& t : s.trace) trace.push_back({t.energy, t.grad_norm, t.step});
  return {{"stage", s.stage},
          {"gamma", s.gamma},
          {"iterations", s.iterations},
          {"evaluations", s.evaluations},
          {"stop", to_string(s.stop)},
          {"line_search_failed", s.line_search_failed},
          {"message", s.message},
          {"breakdown", breakdown_json(s.breakdown)},
          {"residual", s.residual},
          {"huber_gap", s.huber_gap},
          {"gap_bound", s.gap_bound},
          {"trace_columns", {"energy", "grad_norm", "step"}},
          {"trace", std::move(trace)}};
}

/// Extra context stored next to a result.
struct ResultContext {
  double scale = 1.0;  // coordinates in the file = input coordinates * scale
  std::string source_path, target_path;
  bool weights_on_target = false;
  Json config;
};

template <int Dim>
Json result_json(const MatchResult<Dim>& r, const ResultContext& ctx) {
  Json j;
  j["format_version"] = result_format_version;
  j["dim"] = Dim;
  j["distance"] = r.distance;
  j["distance_definition"] = "sqrt(path energy)";
  j["breakdown"] = breakdown_json(r.breakdown);
  j["final_gamma"] = r.final_gamma;
  j["fit_residual"] = r.fit_residual;
  j["fixed_weights"] = r.fixed_weights;
  j["weights_on_target"] = ctx.weights_on_target;
  j["failed"] = r.failed;
  if (r.failed) j["failure"] = r.failure;
  j["scale"] = ctx.scale;
  j["source"] = ctx.source_path;
  j["target"] = ctx.target_path;
  j["spline"] = {{"time_order", r.spline.time_order},       {"space_order", r.spline.space_order},
                 {"time_controls", r.spline.time_controls}, {"space_controls", r.spline.space_controls},
                 {"time_nodes", r.spline.time_nodes},       {"space_nodes", r.spline.space_nodes}};
  // controls[k][i][j] = control point (time slice i, space index j) of component k.
  Json controls = Json::array();
  for (const auto& net : r.nets) {
    Json comp = Json::array();
    for (Eigen::Index i = 0; i < net[0].rows(); ++i) {
      Json slice = Json::array();
      for (Eigen::Index jj = 0; jj < net[0].cols(); ++jj) {
        Json pt = Json::array();
        for (int d = 0; d < Dim; ++d) pt.push_back(net[d](i, jj));
        slice.push_back(std::move(pt));
      }
      comp.push_back(std::move(slice));
    }
    controls.push_back(std::move(comp));
  }
  j["controls"] = std::move(controls);
  j["resample_counts"] = r.resample_counts;
  j["rho0"] = r.rho0;
  j["delta_rho"] = std::vector<double>(r.delta_rho.data(), r.delta_rho.data() + r.delta_rho.size());
  j["target_graph"] = shape_graph_json(r.target);
  j["stages"] = Json::array();
  for (const auto& s : r.stages) j["stages"].push_back(stage_json(s));
  j["config"] = ctx.config;
  return j;
}

/// The parts of a result needed to re-render it.
template <int Dim>
MatchResult<Dim> parse_result_as(const Json& j, const std::string& where) {
  try {
    if (j.at("format_version").get<int>() != result_format_version)
      throw detail::input_error(where, "unsupported result format version");
    MatchResult<Dim> r;
    r.distance = j.at("distance").get<double>();
    r.breakdown = parse_breakdown(j.at("breakdown"));
    r.final_gamma = j.at("final_gamma").get<double>();
    r.fit_residual = j.at("fit_residual").get<double>();
    r.fixed_weights = j.at("fixed_weights").get<bool>();
    r.failed = j.at("failed").get<bool>();
    if (r.failed) r.failure = j.at("failure").get<std::string>();
    const auto& s = j.at("spline");
    r.spline.time_order = s.at("time_order").get<int>();
    r.spline.space_order = s.at("space_order").get<int>();
    r.spline.time_controls = s.at("time_controls").get<int>();
    r.spline.space_controls = s.at("space_controls").get<int>();
    r.spline.time_nodes = s.at("time_nodes").get<int>();
    r.spline.space_nodes = s.at("space_nodes").get<int>();
    for (const auto& comp : j.at("controls")) {
      std::array<Eigen::MatrixXd, Dim> net;
      for (auto& m : net) m.resize(r.spline.time_controls, r.spline.space_controls);
      if (static_cast<int>(comp.size()) != r.spline.time_controls)
        throw detail::input_error(where, "control net has the wrong number of time slices");
      for (int i = 0; i < r.spline.time_controls; ++i) {
        if (static_cast<int>(comp[i].size()) != r.spline.space_controls)
          throw detail::input_error(where, "control net has the wrong number of space controls");
        for (int jj = 0; jj < r.spline.space_controls; ++jj)
          for (int d = 0; d < Dim; ++d) net[d](i, jj) = comp[i][jj].at(d).get<double>();
      }
      r.nets.push_back(std::move(net));
    }
    r.resample_counts = j.at("resample_counts").get<std::vector<int>>();
    r.rho0 = j.at("rho0").get<std::vector<double>>();
    const auto dr = j.at("delta_rho").get<std::vector<double>>();
    r.delta_rho = Eigen::Map<const Eigen::VectorXd>(dr.data(), static_cast<Eigen::Index>(dr.size()));
    r.target = parse_shape_graph_as<Dim>(j.at("target_graph"), where + ": target_graph");
    for (const auto& sj : j.at("stages")) {
      StageReport st;
      st.stage = sj.at("stage").get<int>();
      st.gamma = sj.at("gamma").get<double>();
      st.iterations = sj.at("iterations").get<int>();
      st.evaluations = sj.at("evaluations").get<int>();
      const auto stop = sj.at("stop").get<std::string>();
      for (auto v : {LbfgsStop::gradient, LbfgsStop::energy, LbfgsStop::max_iterations,
                     LbfgsStop::line_search})
        if (stop == to_string(v)) st.stop = v;
      st.line_search_failed = sj.at("line_search_failed").get<bool>();
      st.message = sj.at("message").get<std::string>();
      st.breakdown = parse_breakdown(sj.at("breakdown"));
      st.residual = sj.at("residual").get<double>();
      st.huber_gap = sj.at("huber_gap").get<double>();
      st.gap_bound = sj.at("gap_bound").get<double>();
      for (const auto& t : sj.at("trace"))
        st.trace.push_back({t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()});
      r.stages.push_back(std::move(st));
    }
    if (r.rho0.size() != dr.size())
      throw detail::input_error(where, "rho0 and delta_rho lengths differ");
    return r;
  } catch (const Json::exception& e) {
    throw detail::input_error(where, std::string("malformed result: ") + e.what());
  }
}

using AnyMatchResult = std::variant<MatchResult<2>, MatchResult<3>>;

inline AnyMatchResult read_result(const std::string& path) {
  const Json j = detail::read_json_file(path);
  if (!j.is_object() || !j.contains("dim")) throw detail::input_error(path, "missing \"dim\"");
  const int dim = j["dim"].is_number_integer() ? j["dim"].get<int>() : 0;
  if (dim == 2) return parse_result_as<2>(j, path);
  if (dim == 3) return parse_result_as<3>(j, path);
  throw detail::input_error(path, "\"dim\" must be 2 or 3");
}

inline Json checkpoint_json(const StageReport& s, const Eigen::VectorXd& z) {
  return {{"format_version", checkpoint_format_version},
          {"layout", "free controls (slice, slot, coordinate), then delta_rho"},
          {"stage", s.stage},
          {"gamma", s.gamma},
          {"breakdown", breakdown_json(s.breakdown)},
          {"z", std::vector<double>(z.data(), z.data() + z.size())}};
}

}  // namespace sge
