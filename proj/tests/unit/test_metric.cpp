#include "sge/metric.hpp"
#include "support/shapes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sge;
using sge::testing::P;

namespace {

constexpr double pi = std::numbers::pi;

SplineConfig small_config() {
  SplineConfig c;
  c.time_controls = 4;
  c.space_controls = 12;
  return c;
}

// Gauss nodes on [0, 1] split into `spans` pieces.
QuadratureRule unit_rule(int spans, int nodes) {
  return make_quadrature(KnotVector(1, spans + 1), nodes);
}

template <class C, class H>
double analytic_metric(C c, H h, const MetricConfig& cfg, int spans = 64) {
  // c(theta) and h(theta) return {value, d1, d2}.
  const auto q = unit_rule(spans, 4);
  CurveJet<2> cj, hj;
  for (double x : q.nodes) {
    const auto cv = c(x);
    const auto hv = h(x);
    cj.value.push_back(cv[0]);
    cj.d1.push_back(cv[1]);
    cj.d2.push_back(cv[2]);
    hj.value.push_back(hv[0]);
    hj.d1.push_back(hv[1]);
    hj.d2.push_back(hv[2]);
  }
  return metric_value<2>(cj, hj, q.weights, cfg);
}

using Jet3 = std::array<Vec<2>, 3>;

Jet3 circle(double x) {
  const double a = 2 * pi * x;
  return {P(std::cos(a), std::sin(a)), 2 * pi * P(-std::sin(a), std::cos(a)),
          -4 * pi * pi * P(std::cos(a), std::sin(a))};
}

// Slice 0 fitted to g; slice i moves by u(i) A + u(i)^2 B, where u runs
// from 0 to 1 and A, B are random smooth deformation fields evaluated at the
// control points.
PathSpline<2> random_path(std::mt19937& rng, const ShapeGraphSpec<2>& g, double amplitude = 0.05,
                          SplineConfig cfg = small_config()) {
  PathSpline<2> p(cfg, g.adjacency);
  fit_initial_slice(p, g);
  p.make_constant();
  std::normal_distribution<double> n01;
  auto random_field = [&] {
    Eigen::Matrix2d A;
    A << n01(rng), n01(rng), n01(rng), n01(rng);
    const Vec<2> b = P(n01(rng), n01(rng)), c = P(n01(rng), n01(rng));
    const double f = 2.0 + 2.0 * std::abs(n01(rng));
    return [=](const Vec<2>& x) -> Vec<2> {
      return A * x + b + P(c[0] * std::sin(f * x[1]), c[1] * std::cos(f * x[0]));
    };
  };
  const auto first = random_field();
  const auto second = random_field();
  const int last = p.num_slices() - 1;
  for (int i = 1; i <= last; ++i) {
    const double u = static_cast<double>(i) / last;
    for (int s = 0; s < p.slots_per_slice(); ++s) {
      const Vec<2> x = p.control(0, s);
      p.control(i, s) += amplitude * (u * first(x) + u * u * second(x));
    }
  }
  return p;
}

// Riemann-sum oracle: per time span, midpoint rule with central differences
// in t; the space integral uses a dense Gauss rule on the evaluated jets.
double dense_path_energy(const PathSpline<2>& p, const MetricConfig& cfg, int samples_per_span) {
  // Four sub-spans per knot span, so every node sees a polynomial piece.
  const auto q = unit_rule(4 * (p.config().space_controls - p.config().space_order), 4);
  const int spans = p.config().time_controls - p.config().time_order;
  double total = 0.0;
  for (int s = 0; s < spans; ++s) {
    const double a = double(s) / spans, b = double(s + 1) / spans, h = (b - a) / samples_per_span;
    for (int m = 0; m < samples_per_span; ++m) {
      const double t = a + (m + 0.5) * h, dt = 1e-3 * h;
      for (int k = 0; k < p.num_components(); ++k) {
        CurveJet<2> cj, hj;
        for (double x : q.nodes) {
          cj.d1.push_back(p.evaluate(k, t, x, 0, 1));
          cj.d2.push_back(p.evaluate(k, t, x, 0, 2));
          auto diff = [&](int o) { return Vec<2>((p.evaluate(k, t + dt, x, 0, o) - p.evaluate(k, t - dt, x, 0, o)) / (2 * dt)); };
          hj.value.push_back(diff(0));
          hj.d1.push_back(diff(1));
          hj.d2.push_back(diff(2));
        }
        total += h * metric_value<2>(cj, hj, q.weights, cfg);
      }
    }
  }
  return total;
}

ShapeGraphSpec<2> unit_segment() {
  ShapeGraphSpec<2> s;
  s.components.push_back({{P(0, 0), P(0.5, 0), P(1, 0)}});
  s.adjacency = AdjacencyMatrix(1);
  return s;
}

void translate(PathSpline<2>& p, const Vec<2>& v) {
  for (int i = 0; i < p.num_slices(); ++i)
    for (int s = 0; s < p.slots_per_slice(); ++s)
      p.control(i, s) += v * (double(i) / (p.num_slices() - 1));
}

}  // namespace

TEST(MetricValue, UnitSegmentConstantField) {
  const MetricConfig cfg;  // (0.1, 1, 1e-5)
  const double v = analytic_metric([](double x) { return Jet3{P(x, 0), P(1, 0), P(0, 0)}; },
                                   [](double) { return Jet3{P(0, 1), P(0, 0), P(0, 0)}; }, cfg);
  EXPECT_NEAR(v, 0.1, 1e-14);
}

TEST(MetricValue, ZeroField) {
  const double v = analytic_metric(circle, [](double) { return Jet3{P(0, 0), P(0, 0), P(0, 0)}; },
                                   MetricConfig{});
  EXPECT_EQ(v, 0.0);
}

TEST(MetricValue, CircleAgainstDenseTrapezoid) {
  const MetricConfig cfg;
  const double v = analytic_metric(circle, circle, cfg);

  // Oracle: 10^4 samples, arc-length derivatives by finite differences on the
  // sampled polygon, trapezoid rule in arc length.
  const int n = 10000;
  std::vector<Vec<2>> c(n + 1), h(n + 1);
  for (int i = 0; i <= n; ++i) c[i] = h[i] = circle(double(i) / n)[0];
  double oracle = 0.0;
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n, im = (i + n - 1) % n;
    const double ds_f = (c[ip] - c[i]).norm(), ds_b = (c[i] - c[im]).norm();
    const Vec<2> dh = (h[ip] - h[im]) / (ds_f + ds_b);
    const Vec<2> d2h = 2.0 * ((h[ip] - h[i]) / ds_f - (h[i] - h[im]) / ds_b) / (ds_f + ds_b);
    const double ds = 0.5 * (ds_f + ds_b);
    oracle += ds * (cfg.coefficients[0] * h[i].squaredNorm() + cfg.coefficients[1] * dh.squaredNorm() +
                    cfg.coefficients[2] * d2h.squaredNorm());
  }
  EXPECT_NEAR(v, oracle, 1e-3);
  EXPECT_NEAR(v, 2 * pi * (0.1 + 1 + 1e-5), 1e-9);
}

TEST(MetricValue, ReparametrizationInvariance) {
  const MetricConfig cfg;
  // phi(x) = x + 0.1 sin(2 pi x) / (2 pi): increasing, fixes 0 and 1.
  auto phi = [](double x) {
    return std::array<double, 3>{x + 0.1 * std::sin(2 * pi * x) / (2 * pi), 1 + 0.1 * std::cos(2 * pi * x),
                                 -0.2 * pi * std::sin(2 * pi * x)};
  };
  auto curve = [](double x) {
    return Jet3{P(x, 0.3 * x * x), P(1, 0.6 * x), P(0, 0.6)};
  };
  auto field = [](double x) {
    return Jet3{P(std::sin(3 * x), x), P(3 * std::cos(3 * x), 1), P(-9 * std::sin(3 * x), 0)};
  };
  auto compose = [&](auto f) {
    return [=](double x) {
      const auto p = phi(x);
      const auto j = f(p[0]);
      return Jet3{j[0], j[1] * p[1], Vec<2>(j[2] * p[1] * p[1] + j[1] * p[2])};
    };
  };
  const double direct = analytic_metric(curve, field, cfg);
  for (int spans : {16, 64}) {
    const double reparam = analytic_metric(compose(curve), compose(field), cfg, spans);
    EXPECT_NEAR(reparam, direct, spans == 16 ? 1e-7 : 1e-10);
  }
}

TEST(MetricValue, ImmersionViolationThrows) {
  try {
    analytic_metric([](double x) { return Jet3{P(x, 0), P(0, 0), P(0, 0)}; }, circle, MetricConfig{});
    FAIL() << "expected an immersion error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::immersion);
  }
}

TEST(MetricConfig, RejectsBadCoefficients) {
  MetricConfig c;
  c.coefficients = {0.0, 0.0};
  EXPECT_THROW(c.check(), Error);
  c.coefficients = {1.0, -1.0};
  EXPECT_THROW(c.check(), Error);
  c.coefficients = {1, 1, 1, 1};
  EXPECT_THROW(c.check(), Error);
}

TEST(ScaleInvariant, ExponentRules) {
  MetricConfig c;
  c.variant = MetricVariant::scale_invariant;
  EXPECT_EQ(c.length_exponent(0), -3.0);
  EXPECT_EQ(c.length_exponent(2), 1.0);
  c.exponent = ScaleExponentRule::printed;
  EXPECT_EQ(c.length_exponent(0), 4.0);
  EXPECT_EQ(c.length_exponent(1), 3.0);

  // Segment of length 2, unit field: a0 * l^p0 * |h|^2 * l.
  for (auto rule : {ScaleExponentRule::dimensional, ScaleExponentRule::printed}) {
    c.exponent = rule;
    const double v = analytic_metric([](double x) { return Jet3{P(2 * x, 0), P(2, 0), P(0, 0)}; },
                                     [](double) { return Jet3{P(0, 1), P(0, 0), P(0, 0)}; }, c);
    EXPECT_NEAR(v, 0.1 * std::pow(2.0, c.length_exponent(0)) * 2.0, 1e-13);
  }
}

TEST(PathEnergy, ConstantPathIsZero) {
  std::mt19937 rng(1);
  auto p = random_path(rng, sge::testing::open_arc(20));
  p.make_constant();
  const PathBasis basis(small_config());
  EXPECT_EQ(path_energy(p, MetricConfig{}, basis), 0.0);
  const auto g = path_energy_gradient(p, MetricConfig{}, basis);
  EXPECT_EQ(free_part<2>(p, g.gradient).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PathEnergy, SegmentTranslation) {
  PathSpline<2> p(small_config(), unit_segment().adjacency);
  fit_initial_slice(p, unit_segment());
  translate(p, P(1, 0));
  const PathBasis basis(small_config());
  EXPECT_NEAR(path_energy(p, MetricConfig{}, basis), 0.1, 1e-12);

  // E(s) = a0 |s v|^2 l, so dE/ds at s = 1 is 0.2.
  const auto g = path_energy_gradient(p, MetricConfig{}, basis);
  PathSpline<2> dir(small_config(), unit_segment().adjacency);
  translate(dir, P(1, 0));
  EXPECT_NEAR(free_part<2>(p, g.gradient).dot(dir.free_view()), 0.2, 1e-11);
}

TEST(PathEnergy, MatchesDenseRiemannSum) {
  // Default time resolution (N_t = 10, two Gauss nodes per span); 999 time
  // samples in the oracle.
  std::mt19937 rng(2);
  SplineConfig sc = small_config();
  sc.time_controls = SplineConfig{}.time_controls;
  const PathBasis basis(sc);
  for (auto variant : {MetricVariant::constant_coefficient, MetricVariant::scale_invariant}) {
    MetricConfig cfg;
    cfg.variant = variant;
    const auto p = random_path(rng, sge::testing::two_branch(20), 0.1, sc);
    const double e = path_energy(p, cfg, basis);
    const double oracle = dense_path_energy(p, cfg, 111);

    EXPECT_NEAR(e, oracle, 1e-4 * oracle);
  }
}

TEST(PathEnergy, GradientMatchesCentralDifferences) {
  std::mt19937 rng(3);
  const PathBasis basis(small_config());
  for (auto variant : {MetricVariant::constant_coefficient, MetricVariant::scale_invariant}) {
    MetricConfig cfg;
    cfg.variant = variant;
    const auto g = sge::testing::closed_blob(30);
    auto p = random_path(rng, g);
    const Eigen::VectorXd analytic = free_part<2>(p, path_energy_gradient(p, cfg, basis).gradient);
    Eigen::VectorXd fd(analytic.size());
    const Eigen::VectorXd z = p.free_view();
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      p.set_free(zp);
      const double ep = path_energy(p, cfg, basis);
      p.set_free(zm);
      const double em = path_energy(p, cfg, basis);
      fd[i] = (ep - em) / (2 * h);
    }
    p.set_free(z);
    EXPECT_LT((fd - analytic).norm() / analytic.norm(), 1e-5);
  }
}

TEST(PathEnergy, PermutationInvarianceIsExact) {
  std::mt19937 rng(4);
  const auto g = sge::testing::two_branch(20);
  const auto p = random_path(rng, g);
  const std::vector<int> order{2, 0, 1};
  const auto gp = permuted(g, order);
  PathSpline<2> q(small_config(), gp.adjacency);
  for (int i = 0; i < p.num_slices(); ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < small_config().space_controls; ++j)
        q.control(i, q.slot(k, j)) = p.control(i, p.slot(order[k], j));
  const PathBasis basis(small_config());
  EXPECT_EQ(path_energy(p, MetricConfig{}, basis), path_energy(q, MetricConfig{}, basis));
}

TEST(PathEnergy, RigidMotionInvariance) {
  std::mt19937 rng(5);
  const auto p = random_path(rng, sge::testing::open_arc(20));
  const PathBasis basis(small_config());
  const double e = path_energy(p, MetricConfig{}, basis);
  auto moved = p;
  const Eigen::Rotation2D<double> R(0.7);
  for (Eigen::Index c = 0; c < moved.controls().cols(); ++c)
    moved.controls().col(c) = R * moved.controls().col(c) + P(3.0, -2.0);
  EXPECT_NEAR(path_energy(moved, MetricConfig{}, basis), e, 1e-12 * e);
}

TEST(PathEnergy, ScaleInvariantVariantIgnoresScale) {
  std::mt19937 rng(6);
  auto p = random_path(rng, sge::testing::open_arc(20));
  const PathBasis basis(small_config());
  MetricConfig cfg;
  cfg.variant = MetricVariant::scale_invariant;
  const double e = path_energy(p, cfg, basis);
  p.controls() *= 3.0;
  EXPECT_NEAR(path_energy(p, cfg, basis), e, 1e-11 * e);
}

TEST(PathEnergy, NonnegativeOnRandomPaths) {
  std::mt19937 rng(7);
  const PathBasis basis(small_config());
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_path(rng, sge::testing::two_branch(10), 0.02 * (trial + 1));
    EXPECT_GT(path_energy(p, MetricConfig{}, basis), 0.0);
  }
}

TEST(PathEnergy, DegeneratePathReportsImmersion) {
  PathSpline<2> p(small_config(), AdjacencyMatrix(1));  // all controls zero
  const PathBasis basis(small_config());
  try {
    path_energy(p, MetricConfig{}, basis);
    FAIL() << "expected an immersion error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::immersion);
  }
}

TEST(ConstantPathHessian, MatchesGradientDifferences) {
  std::mt19937 rng(8);
  const auto g = sge::testing::two_branch(15);
  for (auto variant : {MetricVariant::constant_coefficient, MetricVariant::scale_invariant}) {
    MetricConfig cfg;
    cfg.variant = variant;
    auto p = random_path(rng, g);
    p.make_constant();
    const PathBasis basis(small_config());
    const Eigen::MatrixXd H = Eigen::MatrixXd(constant_path_hessian(p, cfg, basis));
    const Eigen::VectorXd z = p.free_view();
    std::normal_distribution<double> n01;
    Eigen::VectorXd d(z.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n01(rng);
    // The gradient is linear in a small perturbation up to O(eps^2).
    const double eps = 1e-6;
    p.set_free(z + eps * d);
    const Eigen::VectorXd gd = free_part<2>(p, path_energy_gradient(p, cfg, basis).gradient) / eps;
    EXPECT_LT((gd - H * d).norm() / (H * d).norm(), 1e-4);
    EXPECT_LT((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-12 * H.cwiseAbs().maxCoeff());
  }
}
