#pragma once

// Smoothed continuation: minimize E_gamma for gamma_j = gamma0 * kappa^j,
// each stage warm-started from the previous optimum, the first from the
// constant path with drho = 0.

#include "sge/energy.hpp"
#include "sge/lbfgs.hpp"
#include "sge/regularizer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sge {

struct StageReport {
  int stage = 0;
  double gamma = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStop stop = LbfgsStop::max_iterations;
  bool line_search_failed = false;
  std::string message;
  std::vector<LbfgsIterate> trace;
  EnergyBreakdown breakdown;
  double residual = 0.0;    // |shrink(D drho, alpha/gamma) - D drho|_2
  double huber_gap = 0.0;   // alpha |D drho|_1 - sum huber
  double gap_bound = 0.0;   // (N - K) alpha^2 / (2 gamma)
};

struct SfistaOutcome {
  Eigen::VectorXd z;
  std::vector<StageReport> stages;
  bool failed = false;
  std::string failure;  // stage context of the failure
};

using StageCallback = std::function<void(const StageReport&, const Eigen::VectorXd& z)>;

template <int Dim>
StageReport make_stage_report(const PreparedMatch<Dim>& match, int stage, double gamma,
                              const LbfgsResult& r) {
  StageReport s;
  s.stage = stage;
  s.gamma = gamma;
  s.iterations = r.iterations;
  s.evaluations = r.evaluations;
  s.stop = r.stop;
  s.line_search_failed = r.line_search_failed;
  s.message = r.message;
  s.trace = r.trace;
  s.breakdown = match.breakdown(r.z, gamma);
  const double alpha = match.params().alpha;
  if (!match.fixed_weights() && alpha > 0.0) {
    const Eigen::VectorXd v = match.difference_operator().apply(match.delta_rho(r.z));
    s.residual = (shrink(v, alpha / gamma) - v).norm();
    s.huber_gap = s.breakdown.tv - s.breakdown.huber;
    s.gap_bound = static_cast<double>(v.size()) * alpha * alpha / (2.0 * gamma);
  }
  return s;
}

template <int Dim>
SfistaOutcome sfista_match(const PreparedMatch<Dim>& match, const SfistaSchedule& schedule,
                           const LbfgsConfig& lbfgs, const StageCallback& on_stage = {}) {
  schedule.check();
  SfistaOutcome out;
  out.z = match.initial_point();
  // With frozen weights gamma plays no role: one stage with the whole budget.
  const int stages = match.fixed_weights() ? 1 : schedule.stages;
  LbfgsConfig cfg = lbfgs;
  if (match.fixed_weights()) cfg.max_iterations = lbfgs.max_iterations * schedule.stages;
  for (int j = 0; j < stages; ++j) {
    const double gamma = schedule.gamma(match.fixed_weights() ? schedule.stages - 1 : j);
    try {
      const auto r =
          lbfgs_minimize(assemble_energy(match, gamma), out.z, cfg, match.preconditioner(gamma));
      out.stages.push_back(make_stage_report(match, j, gamma, r));
      out.z = r.z;
      if (on_stage) on_stage(out.stages.back(), out.z);
    } catch (const Error& e) {
      out.failed = true;
      out.failure = "stage " + std::to_string(j) + " (gamma = " + std::to_string(gamma) +
                    "): " + e.what();
      break;
    }
  }
  return out;
}

}  // namespace sge
