#include "sge/io.hpp"
#include "sge/pipeline.hpp"
#include "support/shapes.hpp"

#include <gtest/gtest.h>

using namespace sge;
using sge::testing::P;

namespace {

ShapeGraphSpec<2> load2(const std::string& name) {
  return std::get<0>(read_shape_graph(std::string(SGE_DATA_DIR) + "/" + name));
}

ShapeGraphSpec<2> translated(ShapeGraphSpec<2> s, const Vec<2>& v) {
  for (auto& c : s.components)
    for (auto& x : c.vertices) x += v;
  return s;
}

double max_vertex_gap(const PolygonalGraph<2>& a, const PolygonalGraph<2>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.vertices.size(); ++k)
    for (std::size_t i = 0; i < a.vertices[k].size(); ++i)
      m = std::max(m, (a.vertices[k][i] - b.vertices[k][i]).norm());
  return m;
}

// Shared by several tests: open arc matched to its translate by (0.3, 0).
const MatchResult<2>& translation_result() {
  static const MatchResult<2> r = [] {
    const auto src = load2("open_arc.json");
    return match(MatchProblem<2>{src, translated(src, P(0.3, 0.0)), {}});
  }();
  return r;
}

}  // namespace

TEST(Match, SelfMatchIsNearZero) {
  const auto g = load2("closed_blob.json");
  const auto r = match(MatchProblem<2>{g, g, {}});
  ASSERT_FALSE(r.failed) << r.failure;
  EXPECT_LT(r.distance, 1e-3);
  EXPECT_LT(r.delta_rho.lpNorm<Eigen::Infinity>(), 1e-3);
  EXPECT_EQ(r.stages.size(), 6u);

  const auto f = fixed_weight_match(MatchProblem<2>{g, g, {}});
  EXPECT_LT(f.distance, 1e-3);
  EXPECT_EQ(f.delta_rho.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Match, TranslationStaysBelowTheAdmissiblePath) {
  const auto& r = translation_result();
  ASSERT_FALSE(r.failed) << r.failure;
  const double a0 = MetricConfig{}.coefficients[0];
  const double len = polyline_length(load2("open_arc.json").components[0].vertices);
  EXPECT_LE(r.distance, 0.3 * std::sqrt(a0 * len) * 1.05);
  EXPECT_LE(r.breakdown.path, a0 * 0.09 * len * 1.1);
  // And the target is actually reached.
  EXPECT_LT(r.breakdown.varifold, 1e-4);
}

TEST(Match, BreakdownIsConsistent) {
  const auto& r = translation_result();
  const auto& b = r.breakdown;
  EXPECT_GE(b.path, 0.0);
  EXPECT_GE(b.varifold, 0.0);
  EXPECT_GE(b.penalty, 0.0);
  EXPECT_DOUBLE_EQ(r.distance, std::sqrt(b.path));
  EXPECT_NEAR(b.smoothed_total, b.path + b.varifold_weighted + b.penalty_weighted + b.huber, 1e-12);
  // Exact l1 against its Huber smoothing at the last stage.
  const double N = static_cast<double>(r.num_edges()), K = 1.0, alpha = 0.1;
  EXPECT_GE(b.tv - b.huber, 0.0);
  EXPECT_LE(b.tv - b.huber, (N - K) * alpha * alpha / (2 * r.final_gamma));
}

TEST(GeodesicFrames, EndpointsAndMidpoint) {
  const auto& r = translation_result();
  const auto src = load2("open_arc.json");
  const auto frames = geodesic_frames(r, {0.0, 0.5, 1.0});
  ASSERT_EQ(frames.size(), 3u);
  // t = 0: the source resampling, up to the spline fit.
  const auto resampled = resample(src, r.resample_counts);
  EXPECT_LT(max_vertex_gap(frames[0], resampled), 10 * r.fit_residual + 1e-12);
  for (Eigen::Index i = 0; i < r.num_edges(); ++i) {
    EXPECT_EQ(frames[0].weights[i], r.rho0[i]);
    EXPECT_EQ(frames[2].weights[i], r.weight(i));
    EXPECT_DOUBLE_EQ(frames[1].weights[i], r.rho0[i] + 0.5 * r.delta_rho[i]);
  }
  // t = 1 lies on the translate; t = 0.5 halfway.
  const auto shifted = translated(src, P(0.3, 0.0));
  EXPECT_LT(max_vertex_gap(frames[2], resample(shifted, r.resample_counts)), 5e-3);
  for (std::size_t i = 0; i < frames[1].vertices[0].size(); ++i) {
    const Vec<2> mid = 0.5 * (frames[0].vertices[0][i] + frames[2].vertices[0][i]);
    EXPECT_LT((frames[1].vertices[0][i] - mid).norm(), 1e-3);
  }
  EXPECT_THROW(geodesic_frames(r, {1.5}), Error);
}

TEST(Match, WeightsRemoveTheUnmatchedBranch) {
  const auto src = load2("two_branch.json");
  const auto tgt = load2("one_branch.json");
  const auto weighted = match(MatchProblem<2>{src, tgt, {}});
  const auto fixed = fixed_weight_match(MatchProblem<2>{src, tgt, {}});
  ASSERT_FALSE(weighted.failed) << weighted.failure;
  ASSERT_FALSE(fixed.failed) << fixed.failure;
  EXPECT_LT(weighted.distance, fixed.distance);

  // Mean weight per source component: trunk, left branch (kept), right branch.
  std::vector<double> mean(3, 0.0);
  Eigen::Index e = 0;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < weighted.resample_counts[k]; ++i) mean[k] += weighted.weight(e++);
    mean[k] /= weighted.resample_counts[k];
  }
  EXPECT_GT(mean[0], 0.9);
  EXPECT_GT(mean[1], 0.9);
  EXPECT_LT(mean[2], 0.1);
}

TEST(Match, LargeAlphaAgreesWithFixedWeights) {
  // Same topology, unit weights: at alpha = 1e3 any drho costs far more than
  // it can save.
  MatchProblem<2> p{sge::testing::two_branch(30, 0.6), sge::testing::two_branch(30, 0.8), {}};
  p.params.alpha = 1e3;
  const auto weighted = match(p);
  const auto fixed = fixed_weight_match(p);
  ASSERT_FALSE(weighted.failed) << weighted.failure;
  const double ew = weighted.breakdown.path + weighted.breakdown.varifold_weighted;
  const double ef = fixed.breakdown.path + fixed.breakdown.varifold_weighted;
  EXPECT_LT(std::abs(ew - ef), 0.05 * ef);
  EXPECT_LT(std::abs(weighted.distance - fixed.distance), 0.05 * fixed.distance);
}

TEST(Match, WeightsOnTargetSwapsRoles) {
  MatchProblem<2> p{load2("two_branch.json"), load2("one_branch.json"), {}};
  p.params.resample_counts = {30, 30, 30};
  const auto q = swap_roles(p);
  EXPECT_EQ(q.source.num_components(), 2);
  EXPECT_EQ(q.target.num_components(), 3);
  EXPECT_TRUE(q.params.resample_counts.empty());
}

TEST(Match, RejectsBadProblems) {
  const auto g = load2("open_arc.json");
  MatchProblem<2> p{g, g, {}};
  p.params.lambda = 0.0;
  EXPECT_THROW(match(p), Error);
  p = {g, g, {}};
  p.params.resample_counts = {10, 10};
  EXPECT_THROW(match(p), Error);
}
