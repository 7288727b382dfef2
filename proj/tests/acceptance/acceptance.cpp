// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Progress goes to stderr.

#include "sge/sge.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"
#include "support/shapes.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace sge;
using sge::testing::P;

namespace {

const std::string data_dir = SGE_DATA_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <int Dim>
ShapeGraphSpec<Dim> load(const std::string& name) {
  return std::get<Dim == 2 ? 0 : 1>(read_shape_graph(data_dir + "/" + name));
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

template <int Dim>
ShapeGraphSpec<Dim> mapped(ShapeGraphSpec<Dim> s, const std::function<Vec<Dim>(const Vec<Dim>&)>& f) {
  for (auto& c : s.components)
    for (auto& v : c.vertices) v = f(v);
  return s;
}

bool nonincreasing(const std::vector<LbfgsIterate>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].energy > trace[i - 1].energy) return false;
  return true;
}

std::vector<double> component_means(const MatchResult<2>& r) {
  std::vector<double> mean;
  Eigen::Index e = 0;
  for (int n : r.resample_counts) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.weight(e++);
    mean.push_back(s / n);
  }
  return mean;
}

// Weighted runs whose stage reports feed criterion 8.
std::vector<std::pair<std::string, MatchResult<2>>> stage_sources;

// 1. Full gradient against central differences on random small problems.
Outcome gradient_master() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const PreparedMatch<2> m(sge::testing::random_small_problem(rng));
    const double gamma = std::pow(5.0, i % 6);
    const auto z = sge::testing::random_point(m, rng);
    worst = std::max(worst, sge::testing::check_gradient(m, z, gamma, 1e-5).max_relative);
  }
  const double t = seconds_since(t0);
  o.detail << "max relative error " << worst << " over 10 problems, " << t << " s";
  o.require(worst < 1e-4, "error >= 1e-4");
  o.require(t < 60.0, "runtime >= 60 s");
  return o;
}

// 2. Self-match on the example graphs.
Outcome self_match() {
  Outcome o;
  const auto t0 = Clock::now();
  auto check = [&](const std::string& name, double distance, double drho) {
    o.detail << ' ' << name << ": d=" << distance << " |drho|=" << drho << ';';
    o.require(distance < 1e-3, name + " distance");
    o.require(drho < 1e-3, name + " drho");
  };
  for (const char* name : {"open_arc.json", "closed_blob.json", "two_branch.json", "loop_curl_fork.json"}) {
    const auto g = load<2>(name);
    const auto r = match(MatchProblem<2>{g, g, {}});
    o.require(!r.failed, std::string(name) + " solver failure");
    check(name, r.distance, r.delta_rho.lpNorm<Eigen::Infinity>());
    stage_sources.emplace_back(name, r);
  }
  const auto h = load<3>("helix_stem.json");
  const auto r = match(MatchProblem<3>{h, h, {}});
  o.require(!r.failed, "helix_stem solver failure");
  check("helix_stem.json", r.distance, r.delta_rho.lpNorm<Eigen::Infinity>());
  const double t = seconds_since(t0);
  o.detail << ' ' << t << " s";
  o.require(t < 300.0, "runtime >= 300 s");
  return o;
}

// 3. Invariances of the kernel and of the end-to-end distance.
Outcome invariance() {
  Outcome o;
  const KernelConfig k;
  const auto src = load<2>("two_branch.json");
  const auto tgt = mapped<2>(src, [](const Vec<2>& x) {
    return Vec<2>(x[0] + 0.05 * std::sin(3 * x[1]), x[1] + 0.03 * x[0]);
  });
  const auto perm = permuted(tgt, {2, 0, 1});
  const auto flip = reversed_component(tgt, 2);
  const Eigen::Rotation2D<double> R(0.7);
  const auto rigid = [&](const Vec<2>& x) { return Vec<2>(R * x + P(0.2, -0.1)); };

  // Kernel level.
  const auto a = to_polygonal(src), b = to_polygonal(tgt);
  const double ip = inner_product(a, b, k);
  o.require(inner_product(a, to_polygonal(perm), k) == ip, "kernel permutation");
  o.require(inner_product(a, to_polygonal(flip), k) == ip, "kernel flip");
  const double ip_rigid =
      inner_product(to_polygonal(mapped<2>(src, rigid)), to_polygonal(mapped<2>(tgt, rigid)), k);
  o.require(std::abs(ip_rigid - ip) < 1e-12, "kernel rigid motion");
  o.detail << "kernel rigid |diff| " << std::abs(ip_rigid - ip) << ";";

  // End to end.
  const auto base = match(MatchProblem<2>{src, tgt, {}});
  const auto rp = match(MatchProblem<2>{src, perm, {}});
  const auto rf = match(MatchProblem<2>{src, flip, {}});
  const auto rr = match(MatchProblem<2>{mapped<2>(src, rigid), mapped<2>(tgt, rigid), {}});
  o.require(!base.failed && !rp.failed && !rf.failed && !rr.failed, "solver failure");
  const double rel = std::abs(rr.distance - base.distance) / base.distance;
  o.detail << " distance " << base.distance << ", permuted " << rp.distance << ", flipped "
           << rf.distance << ", rigid rel diff " << rel;
  o.require(rp.distance == base.distance, "end-to-end permutation");
  o.require(rf.distance == base.distance, "end-to-end flip");
  o.require(rel < 1e-6, "end-to-end rigid motion");
  stage_sources.emplace_back("two_branch deformed", base);
  return o;
}

// 4. Regularizer values, Huber-prox identity, prox against a grid search.
Outcome regularizer() {
  Outcome o;
  const DifferenceOperator D3({3});
  o.require(tv_norm(Eigen::Vector3d(0, 1, 0), D3) == 2.0, "TV (0,1,0)");
  o.require(tv_norm(Eigen::Vector3d(0.4, 0.4, 0.4), D3) == 0.0, "TV constant");
  o.require(huber(0.0, HuberParams{0.1, 3.0}) == 0.0, "Huber at 0");
  o.require(shrink(0.3, 0.5) == 0.0 && shrink(1.0, 0.5) == 0.5 && shrink(-2.0, 0.5) == -1.5,
            "shrink values");
  const auto edge = make_polygonal_graph<2>({{P(0, 0), P(1, 0)}}, {0.5});
  o.require(zero_one_penalty(edge, PenaltyConfig{}).value == 0.5, "penalty rho = 0.5");
  const double hub = huber_tv(Eigen::Vector3d(0, 1, 0), D3, HuberParams{1.0, 1e6}).value;
  o.require(std::abs(hub - 2.0) / 2.0 < 1e-6, "Huber limit at gamma = 1e6");

  std::mt19937 rng(7);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const HuberParams p{std::exp(n01(rng)), std::exp(n01(rng))};
    const double v = 3.0 * n01(rng);
    const double w = shrink(v, p.threshold());
    worst = std::max(worst, std::abs(huber(v, p) - (p.alpha * std::abs(w) +
                                                    0.5 * p.gamma * (v - w) * (v - w))));
  }
  o.detail << "Huber-prox max diff " << worst;
  o.require(worst < 1e-10, "Huber-prox identity");

  const int grid = 200000;
  const double lo = -3.0, hi = 3.0, step = (hi - lo) / grid;
  double prox_err = 0.0;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double v = u(rng), thr = 0.05 + 0.5 * std::abs(n01(rng));
    double best = 0.0, best_f = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= grid; ++j) {
      const double w = lo + step * j;
      const double f = thr * std::abs(w) + 0.5 * (v - w) * (v - w);
      if (f < best_f) best_f = f, best = w;
    }
    prox_err = std::max(prox_err, std::abs(shrink(v, thr) - best));
  }
  o.detail << ", prox vs grid max diff " << prox_err << " (grid step " << step << ")";
  o.require(prox_err <= step, "prox vs grid search");
  return o;
}

// 5. Fast implementations against naive oracles.
Outcome oracles() {
  Outcome o;
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Varifold inner product: the canonical pairwise order against a plain loop.
  auto jitter = [&](const ShapeGraphSpec<2>& s) {
    auto g = to_polygonal(s);
    for (auto& comp : g.vertices)
      for (auto& v : comp) v += 0.01 * P(n01(rng), n01(rng));
    for (auto& w : g.weights) w = u01(rng);
    return make_polygonal_graph(g.vertices, g.weights);
  };
  const auto a = jitter(load<2>("two_branch.json")), b = jitter(load<2>("loop_curl_fork.json"));
  double vrel = 0.0;
  for (auto orient : {Orientation::squared, Orientation::oriented_exponential}) {
    KernelConfig k;
    k.orientation = orient;
    const double naive = sge::testing::naive_inner(a, b, k);
    vrel = std::max(vrel, std::abs(inner_product(a, b, k) - naive) / std::abs(naive));
  }
  o.detail << "varifold rel diff " << vrel;
  o.require(vrel < 1e-13, "varifold vs double loop");

  // Spline basis and derivatives against Cox-de Boor.
  double serr = 0.0;
  for (int deg = 1; deg <= 3; ++deg) {
    const KnotVector kv(deg, 12);
    std::vector<double> x{0.0, 1.0};
    for (int i = 0; i < 200; ++i) x.push_back(u01(rng));
    for (int d = 0; d <= deg; ++d) {
      const Eigen::MatrixXd B = basis_eval(kv, x, d);
      for (std::size_t r = 0; r < x.size(); ++r)
        for (int j = 0; j < kv.num_basis(); ++j) {
          const double ref = sge::testing::naive_basis(kv.knots(), j, deg, x[r], d);
          serr = std::max(serr, std::abs(B(static_cast<Eigen::Index>(r), j) - ref) /
                                    std::max(1.0, std::abs(ref)));
        }
    }
  }
  o.detail << ", spline max diff " << serr;
  o.require(serr < 1e-12, "spline vs Cox-de Boor");

  // TV against a plain loop.
  const std::vector<int> counts{30, 1, 17, 45};
  const DifferenceOperator D(counts);
  Eigen::VectorXd x(D.cols());
  for (auto& v : x) v = n01(rng);
  const double tv = tv_norm(x, D), naive_tv = sge::testing::naive_tv(x, counts);
  o.detail << ", TV rel diff " << std::abs(tv - naive_tv) / naive_tv;
  o.require(std::abs(tv - naive_tv) <= 1e-15 * naive_tv, "TV vs loop");

  // Rosenbrock.
  auto rosen = [](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    const double p = z[0], q = z[1];
    g.resize(2);
    g[0] = -2 * (1 - p) - 400 * p * (q - p * p);
    g[1] = 200 * (q - p * p);
    return (1 - p) * (1 - p) + 100 * (q - p * p) * (q - p * p);
  };
  const auto r = lbfgs_minimize(rosen, Eigen::Vector2d(-1.2, 1.0), LbfgsConfig{});
  o.detail << ", Rosenbrock f " << r.energy;
  o.require(r.energy < 1e-8, "Rosenbrock");
  return o;
}

// 6. Two branches to one: the unmatched branch fades, and weights help.
Outcome topology() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto src = load<2>("two_branch.json");
  const auto tgt = load<2>("one_branch.json");
  const auto weighted = match(MatchProblem<2>{src, tgt, {}});
  const auto fixed = fixed_weight_match(MatchProblem<2>{src, tgt, {}});
  o.require(!weighted.failed && !fixed.failed, "solver failure");
  const auto mean = component_means(weighted);
  const double t = seconds_since(t0);
  o.detail << "mean weights trunk " << mean[0] << ", kept branch " << mean[1]
           << ", unmatched branch " << mean[2] << "; distance weighted " << weighted.distance
           << " vs fixed " << fixed.distance << "; " << t << " s";
  o.require(mean[2] < 0.1, "unmatched branch weight");
  o.require(mean[0] > 0.9 && mean[1] > 0.9, "matched branch weight");
  o.require(weighted.distance < fixed.distance, "weighted < fixed");
  o.require(t < 600.0, "runtime >= 600 s");
  stage_sources.emplace_back("two_branch -> one_branch", weighted);
  return o;
}

// 7. Translation cannot cost more than the straight translation path.
Outcome translation() {
  Outcome o;
  const auto src = load<2>("open_arc.json");
  const Vec<2> v = P(0.3, 0.0);
  const auto r = match(MatchProblem<2>{src, mapped<2>(src, [&](const Vec<2>& x) { return Vec<2>(x + v); }), {}});
  const double a0 = MetricConfig{}.coefficients[0];
  const double len = polyline_length(src.components[0].vertices);
  const double bound = a0 * v.squaredNorm() * len * 1.1;
  o.detail << "path energy " << r.breakdown.path << " <= " << bound << " (varifold "
           << r.breakdown.varifold << ")";
  o.require(!r.failed, "solver failure");
  o.require(r.breakdown.path <= bound, "bound exceeded");
  stage_sources.emplace_back("translation", r);
  return o;
}

// 8. Stage monotonicity and the Huber gap bound, on every weighted run above.
Outcome sfista_behavior() {
  Outcome o;
  int stages = 0;
  double worst_ratio = 0.0;
  for (const auto& [name, r] : stage_sources) {
    for (const auto& s : r.stages) {
      ++stages;
      o.require(nonincreasing(s.trace), name + " stage " + std::to_string(s.stage) + " not monotone");
      const double K = static_cast<double>(r.resample_counts.size());
      const double N = static_cast<double>(r.num_edges());
      const double bound = (N - K) * 0.1 * 0.1 / (2 * s.gamma);
      o.require(std::abs(s.gap_bound - bound) <= 1e-15 * bound, name + " gap bound bookkeeping");
      o.require(s.huber_gap >= 0.0 && s.huber_gap <= bound,
                name + " stage " + std::to_string(s.stage) + " gap");
      worst_ratio = std::max(worst_ratio, s.huber_gap / bound);
    }
  }
  o.detail << stages << " stages from " << stage_sources.size()
           << " runs; largest gap / bound " << worst_ratio;
  o.require(stages > 0, "no stages");
  return o;
}

// 9. One curve against ten stacked copies of itself.
Outcome bundle() {
  Outcome o;
  const auto curve = load<2>("open_arc.json");
  ShapeGraphSpec<2> bundle;
  const int M = 10;
  for (int m = 0; m < M; ++m) {
    auto c = curve.components[0];
    for (auto& v : c.vertices) v += P(0.0, 0.003 * m);
    bundle.components.push_back(c);
  }
  bundle.adjacency = AdjacencyMatrix(M);
  MatchProblem<2> p{curve, bundle, {}};
  p.params.penalty.beta_tilde = 0.0;
  const auto r = match(p);
  o.require(!r.failed, "solver failure");
  double mean = 0.0;
  for (Eigen::Index i = 0; i < r.num_edges(); ++i) mean += r.weight(i);
  mean /= static_cast<double>(r.num_edges());
  o.detail << "mean weight " << mean << " (target " << M << ")";
  o.require(std::abs(mean - M) <= 0.15 * M, "outside 15% band");
  stage_sources.emplace_back("bundle", r);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::pair<const char*, std::function<Outcome()>>>> criteria{
      {1, {"gradient master test", gradient_master}},
      {2, {"self-match", self_match}},
      {3, {"invariance suite", invariance}},
      {4, {"regularizer suite", regularizer}},
      {5, {"oracle equivalences", oracles}},
      {6, {"topology change", topology}},
      {7, {"translation bound", translation}},
      {9, {"bundle density", bundle}},
      {8, {"SFISTA behavior", sfista_behavior}},  // uses the weighted runs above
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& [id, entry] : criteria) {
    const auto& [name, run] = entry;
    std::cerr << "running criterion " << id << " (" << name << ")" << std::endl;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    all = all && o.pass;
    std::ostringstream line;
    line << "CRITERION " << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << name << ": "
         << o.detail.str();
    lines[id] = line.str();
    std::cerr << lines[id] << std::endl;
  }
  std::cout << std::setprecision(6);
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? 0 : 1;
}
