// sge: command-line front end.
//
//   sge match    --source S.json --target T.json [--config C.json] --out R.json
//                [--fixed-weights] [--weights-on-target] [--checkpoint DIR]
//   sge render   --result R.json --times 0,0.5,1 --out DIR [--projection xy|xz|yz|iso]
//   sge validate --input G.json [--epsilon E]
//   sge resample --input G.json --edges N --out G2.json
//
// Exit codes: 0 success, 2 bad input or invalid graph, 3 solver failure (the
// partial result is still written). Failures also print one JSON line
// {"error": {"category": ..., "message": ...}} on stderr.

#include "sge/sge.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

int exit_code(sge::ErrorCategory c) {
  switch (c) {
    case sge::ErrorCategory::input:
    case sge::ErrorCategory::validation: return 2;
    default: return 3;
  }
}

void report_error(const char* category, const std::string& message) {
  std::cerr << sge::Json{{"error", {{"category", category}, {"message", message}}}}.dump() << '\n';
}

struct MatchOptions {
  std::string source, target, config, out, checkpoint;
  bool fixed_weights = false;
  bool weights_on_target = false;
};

template <int Dim>
int run_match(const MatchOptions& o, sge::ShapeGraphSpec<Dim> source,
              sge::ShapeGraphSpec<Dim> target, const sge::RunConfig& rc, const sge::Json& cfg_echo) {
  const auto eps = [&](const sge::ShapeGraphSpec<Dim>& g) {
    return rc.junction_epsilon >= 0.0 ? rc.junction_epsilon : sge::default_junction_epsilon(g);
  };
  sge::require_valid(source, eps(source), o.source);
  sge::require_valid(target, eps(target), o.target);

  sge::ResultContext ctx;
  ctx.source_path = o.source;
  ctx.target_path = o.target;
  ctx.weights_on_target = o.weights_on_target;
  ctx.config = cfg_echo;
  if (rc.normalize) {
    ctx.scale = sge::joint_unit_scale(source, target);
    source = sge::scaled(std::move(source), ctx.scale);
    target = sge::scaled(std::move(target), ctx.scale);
  }
  sge::MatchProblem<Dim> problem{std::move(source), std::move(target), rc.params};
  if (o.weights_on_target) problem = sge::swap_roles(std::move(problem));

  sge::StageCallback on_stage;
  if (!o.checkpoint.empty()) {
    std::filesystem::create_directories(o.checkpoint);
    on_stage = [&](const sge::StageReport& s, const Eigen::VectorXd& z) {
      char name[64];
      std::snprintf(name, sizeof name, "stage_%02d.json", s.stage);
      sge::write_json_file((std::filesystem::path(o.checkpoint) / name).string(),
                           sge::checkpoint_json(s, z));
    };
  }
  const auto result = o.fixed_weights ? sge::fixed_weight_match(problem, on_stage)
                                      : sge::match(problem, on_stage);
  sge::write_json_file(o.out, sge::result_json(result, ctx));

  const auto& b = result.breakdown;
  std::cout << std::setprecision(10) << "distance " << result.distance << '\n'
            << "path_energy " << b.path << '\n'
            << "varifold " << b.varifold << " (weighted " << b.varifold_weighted << ")\n"
            << "penalty " << b.penalty << " (weighted " << b.penalty_weighted << ")\n"
            << "tv " << b.tv << '\n'
            << "smoothed_total " << b.smoothed_total << '\n';
  if (result.failed) {
    report_error("solver", result.failure);
    return 3;
  }
  return 0;
}

int cmd_match(const MatchOptions& o) {
  sge::RunConfig rc;
  if (!o.config.empty()) rc = sge::read_config(o.config);
  const auto cfg_echo = sge::config_json(rc);
  auto src = sge::read_shape_graph(o.source, rc.junction_epsilon);
  auto tgt = sge::read_shape_graph(o.target, rc.junction_epsilon);
  if (src.index() != tgt.index())
    throw sge::Error(sge::ErrorCategory::input, "source and target have different dimensions");
  if (src.index() == 0)
    return run_match<2>(o, std::get<0>(std::move(src)), std::get<0>(std::move(tgt)), rc, cfg_echo);
  return run_match<3>(o, std::get<1>(std::move(src)), std::get<1>(std::move(tgt)), rc, cfg_echo);
}

std::vector<double> parse_times(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw sge::Error(sge::ErrorCategory::input, "bad time value \"" + item + "\"");
    }
  }
  if (out.empty()) throw sge::Error(sge::ErrorCategory::input, "no frame times given");
  return out;
}

template <int Dim>
int run_render(const sge::MatchResult<Dim>& r, const std::vector<double>& times,
               const std::string& out_dir, sge::Projection proj) {
  const auto frames = sge::geodesic_frames(r, times);
  std::vector<std::vector<sge::Segment2>> segs;
  sge::Bounds2 bounds;
  for (const auto& f : frames) {
    segs.push_back(sge::project_graph(f, proj));
    bounds.add(segs.back());
  }
  const auto overlay = sge::project_graph(sge::to_polygonal(r.target), proj);
  bounds.add(overlay);
  std::filesystem::create_directories(out_dir);
  sge::parallel_for(frames.size(), [&](std::size_t i) {
    const bool last = i + 1 == frames.size();
    char name[64];
    std::snprintf(name, sizeof name, "frame_%03zu.svg", i);
    std::ofstream out(std::filesystem::path(out_dir) / name);
    out << sge::render_svg(segs[i], last ? overlay : std::vector<sge::Segment2>{}, bounds);
    if (!out) throw sge::Error(sge::ErrorCategory::input, std::string("cannot write ") + name);
  });
  std::cout << "wrote " << frames.size() << " frames to " << out_dir << '\n';
  return 0;
}

int cmd_render(const std::string& result, const std::string& times, const std::string& out,
               const std::string& projection) {
  const auto t = parse_times(times);
  const auto proj = sge::parse_projection(projection);
  const auto r = sge::read_result(result);
  if (r.index() == 0) return run_render<2>(std::get<0>(r), t, out, proj);
  return run_render<3>(std::get<1>(r), t, out, proj);
}

int cmd_validate(const std::string& input, double epsilon) {
  const auto g = sge::read_shape_graph(input, epsilon);
  return std::visit(
      [&](const auto& spec) {
        const double eps = epsilon >= 0.0 ? epsilon : sge::default_junction_epsilon(spec);
        const auto report = sge::validate(spec, eps);
        if (report.ok()) {
          std::cout << "valid: " << spec.num_components() << " components\n";
          return 0;
        }
        std::cout << report.summary() << '\n';
        report_error("validation", input + ": " + report.summary());
        return 2;
      },
      g);
}

int cmd_resample(const std::string& input, int edges, const std::string& out) {
  const auto g = sge::read_shape_graph(input);
  return std::visit(
      [&](const auto& spec) {
        sge::require_valid(spec, sge::default_junction_epsilon(spec), input);
        const std::vector<int> counts(spec.num_components(), edges);
        const auto poly = sge::resample(spec, counts);
        using Spec = std::decay_t<decltype(spec)>;
        Spec res;
        res.adjacency = spec.adjacency;
        std::size_t e = 0;
        for (const auto& v : poly.vertices) {
          res.components.push_back({v});
          res.weights.emplace_back(poly.weights.begin() + static_cast<std::ptrdiff_t>(e),
                                   poly.weights.begin() + static_cast<std::ptrdiff_t>(e + v.size() - 1));
          e += v.size() - 1;
        }
        sge::write_shape_graph(out, res);
        std::cout << "wrote " << spec.num_components() << " components with " << edges
                  << " edges each to " << out << '\n';
        return 0;
      },
      g);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic matching of weighted shape graphs"};
  app.require_subcommand(1);

  MatchOptions mo;
  auto* m = app.add_subcommand("match", "Match a source graph to a target graph");
  m->add_option("--source", mo.source, "Source shape graph (JSON)")->required()->envname("SGE_SOURCE");
  m->add_option("--target", mo.target, "Target shape graph (JSON)")->required()->envname("SGE_TARGET");
  m->add_option("--config", mo.config, "Configuration (JSON)")->envname("SGE_CONFIG");
  m->add_option("--out", mo.out, "Result file (JSON)")->required()->envname("SGE_OUT");
  m->add_option("--checkpoint", mo.checkpoint, "Directory for per-stage checkpoints")
      ->envname("SGE_CHECKPOINT");
  m->add_flag("--fixed-weights", mo.fixed_weights, "Keep the source weights fixed")
      ->envname("SGE_FIXED_WEIGHTS");
  m->add_flag("--weights-on-target", mo.weights_on_target,
              "Estimate weights on the target (swaps the roles of the graphs)")
      ->envname("SGE_WEIGHTS_ON_TARGET");

  std::string r_result, r_times = "0,0.25,0.5,0.75,1", r_out, r_proj = "xy";
  auto* r = app.add_subcommand("render", "Write SVG frames of a computed geodesic");
  r->add_option("--result", r_result, "Result file from match")->required()->envname("SGE_RESULT");
  r->add_option("--times", r_times, "Comma-separated times in [0, 1]")->envname("SGE_TIMES");
  r->add_option("--out", r_out, "Output directory")->required()->envname("SGE_OUT");
  r->add_option("--projection", r_proj, "Projection for 3D data: xy, xz, yz or iso")
      ->envname("SGE_PROJECTION");

  std::string v_input;
  double v_eps = -1.0;
  auto* v = app.add_subcommand("validate", "Check a shape graph file");
  v->add_option("--input", v_input, "Shape graph (JSON)")->required()->envname("SGE_INPUT");
  v->add_option("--epsilon", v_eps, "Junction tolerance (default 1e-6 x diameter)")
      ->envname("SGE_EPSILON");

  std::string s_input, s_out;
  int s_edges = 0;
  auto* s = app.add_subcommand("resample", "Resample every component uniformly");
  s->add_option("--input", s_input, "Shape graph (JSON)")->required()->envname("SGE_INPUT");
  s->add_option("--edges", s_edges, "Edges per component")->required()->envname("SGE_EDGES");
  s->add_option("--out", s_out, "Output shape graph (JSON)")->required()->envname("SGE_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("input", e.what());
    return 2;
  }

  try {
    if (*m) return cmd_match(mo);
    if (*r) return cmd_render(r_result, r_times, r_out, r_proj);
    if (*v) return cmd_validate(v_input, v_eps);
    if (*s) return cmd_resample(s_input, s_edges, s_out);
  } catch (const sge::Error& e) {
    report_error(sge::to_string(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    report_error("input", e.what());
    return 2;
  }
  return 0;
}
