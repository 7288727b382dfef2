#pragma once

// End-to-end matching of weighted shape graphs.

#include "sge/energy.hpp"
#include "sge/sfista.hpp"
#include "sge/spline.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sge {

template <int Dim>
struct MatchResult {
  SplineConfig spline;
  ControlNets<Dim> nets;  // optimal path, per component
  std::vector<int> resample_counts;
  std::vector<double> rho0;
  Eigen::VectorXd delta_rho;
  EnergyBreakdown breakdown;  // at the last completed stage
  double distance = 0.0;      // sqrt of the path energy
  double final_gamma = 0.0;
  double fit_residual = 0.0;  // RMS error of the spline fit to the source
  std::vector<StageReport> stages;
  bool fixed_weights = false;
  bool failed = false;
  std::string failure;
  ShapeGraphSpec<Dim> target;  // as matched, for overlays

  Eigen::Index num_edges() const { return delta_rho.size(); }
  double weight(Eigen::Index i) const { return rho0[static_cast<std::size_t>(i)] + delta_rho[i]; }
};

template <int Dim>
MatchResult<Dim> collect_result(const PreparedMatch<Dim>& match, const SfistaOutcome& outcome) {
  MatchResult<Dim> r;
  r.spline = match.params().spline;
  const auto path = match.path(outcome.z);
  r.nets.resize(path.num_components());
  for (int k = 0; k < path.num_components(); ++k)
    for (int d = 0; d < Dim; ++d) r.nets[k][d] = path.net(k, d);
  r.resample_counts = match.resample_counts();
  r.rho0 = match.rho0();
  r.delta_rho = match.delta_rho(outcome.z);
  r.final_gamma = outcome.stages.empty() ? match.params().sfista.gamma0 : outcome.stages.back().gamma;
  r.breakdown = match.breakdown(outcome.z, r.final_gamma);
  r.distance = std::sqrt(std::max(0.0, r.breakdown.path));
  r.fit_residual = match.fit_residual();
  r.stages = outcome.stages;
  r.fixed_weights = match.fixed_weights();
  r.failed = outcome.failed;
  r.failure = outcome.failure;
  r.target = match.problem().target;
  return r;
}

/// Joint estimate of the deformation path and the weight change.
template <int Dim>
MatchResult<Dim> match(const MatchProblem<Dim>& problem, const StageCallback& on_stage = {}) {
  const PreparedMatch<Dim> prepared(problem, false);
  const auto& p = prepared.params();
  return collect_result(prepared, sfista_match(prepared, p.sfista, p.lbfgs, on_stage));
}

/// Same problem with drho frozen at 0; alpha and beta_tilde play no role.
template <int Dim>
MatchResult<Dim> fixed_weight_match(const MatchProblem<Dim>& problem,
                                    const StageCallback& on_stage = {}) {
  const PreparedMatch<Dim> prepared(problem, true);
  const auto& p = prepared.params();
  return collect_result(prepared, sfista_match(prepared, p.sfista, p.lbfgs, on_stage));
}

/// Weights estimated on the target instead: the roles of the two graphs are
/// exchanged, so the path runs from the target to the source.
template <int Dim>
MatchProblem<Dim> swap_roles(MatchProblem<Dim> problem) {
  std::swap(problem.source, problem.target);
  problem.params.resample_counts.clear();
  return problem;
}

/// Path at each t with the display weights rho0 + t * drho.
template <int Dim>
std::vector<PolygonalGraph<Dim>> geodesic_frames(const MatchResult<Dim>& result,
                                                 const std::vector<double>& times) {
  const KnotVector tk(result.spline.time_order, result.spline.time_controls);
  const KnotVector sk(result.spline.space_order, result.spline.space_controls);
  std::vector<PolygonalGraph<Dim>> frames;
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0))
      throw Error(ErrorCategory::input, "frame time " + std::to_string(t) + " outside [0, 1]");
    auto verts = sample_nets<Dim>(result.nets, tk, sk, t, result.resample_counts);
    std::vector<double> w(result.rho0.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = result.rho0[i] + t * result.delta_rho[static_cast<Eigen::Index>(i)];
    frames.push_back(make_polygonal_graph(std::move(verts), std::move(w)));
  }
  return frames;
}

}  // namespace sge
