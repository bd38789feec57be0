#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ml2/error.hpp"
#include "ml2/quadrature.hpp"
#include "oracles.hpp"

using namespace ml2;

namespace {

const auto one = IntegrandSpec::one();

}  // namespace

TEST(Curve, HalfPoleOnFlatGraph) {
  const auto g = graph_from_knots({-1, 1}, {0, 0});
  const auto o = integrate_curve(g, one, AtomicLogWeight::single({0, 0}, 0.5));
  ASSERT_EQ(o.status, QuadStatus::Converged);
  EXPECT_NEAR(o.value.real(), 4.0, 1e-6);
}

TEST(Curve, UnitPoleDivergesAtTwoLn2) {
  const auto g = graph_from_knots({-1, 1}, {0, 0});
  const auto o = integrate_curve(g, one, AtomicLogWeight::single({0, 0}, 1.0));
  ASSERT_EQ(o.status, QuadStatus::Diverged);
  EXPECT_NEAR(o.growth_rate, 2 * std::log(2.0), 0.05);
  // Oracle: the partial integral over |t| > eps is 2 ln(1/eps); each round halves eps.
  const auto& tr = o.trace;
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i].value.real(), tr[i - 1].value.real());
}

TEST(Curve, VerticalSandwich) {
  const Polyline seg({{1, -1}, {1, 1}});
  const auto o = integrate_curve(seg, one, AtomicLogWeight::single({0, 0}, 0.5));
  ASSERT_TRUE(o.converged());
  EXPECT_GE(o.value.real(), 2 / std::pow(std::sqrt(2.0), 0.5));
  EXPECT_LE(o.value.real(), 2.0);
}

TEST(Curve, MatchesGradedOracleOnRandomGraphs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10; ++i) {
    const auto g = random_graph(rng(), 4, 5.0);
    const double beta = 0.1 + 0.8 * u(rng);
    const PlanarPoint z0 = g.at(0.05 + 0.9 * u(rng));
    const auto o = integrate_curve(g, one, AtomicLogWeight::single(z0, beta));
    ASSERT_TRUE(o.converged());
    std::vector<oracle::Pt> v;
    for (const auto& p : g.vertices()) v.push_back({p.x, p.y});
    const auto ns = oracle::polyline_nodes(v, {{z0.x, z0.y}}, 2 / (1 - beta), 400000, oracle::pole({z0.x, z0.y}, beta));
    const double want = static_cast<double>(oracle::sum_weights(ns));
    EXPECT_NEAR(o.value.real(), want, 1e-6 * want) << "beta=" << beta;
  }
}

TEST(Curve, RefinementMonotoneForNonnegative) {
  const auto g = random_graph(3, 5, 2.0);
  const AtomicLogWeight w({{g.at(0.3), 0.7}, {g.at(0.6), 0.2}});
  const auto o = integrate_curve(g, IntegrandSpec::abs2_polynomial({1.0, cplx(0, 2)}), w);
  for (std::size_t i = 1; i < o.trace.size(); ++i) EXPECT_GE(o.trace[i].value.real(), o.trace[i - 1].value.real());
}

TEST(Curve, ProductBound) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  const auto g = graph_from_knots({0, 0.5, 1}, {0, 0.4, 0});
  const double L = g.lipschitz();
  for (int it = 0; it < 20; ++it) {
    const double beta = 0.3 + 0.6 * u(rng);
    const int m = 2 + it % 3;
    std::vector<double> share(m);
    double s = 0;
    for (auto& x : share) s += x = 0.1 + u(rng);
    std::vector<Atom> atoms;
    double bound = 0;
    for (int i = 0; i < m; ++i) {
      const double t = (i + u(rng)) / m;
      const double bi = beta * share[i] / s;
      atoms.push_back({g.at(t), bi});
      bound += (bi / beta) * 2 * (L + 1) / (1 - beta);
    }
    const auto o = integrate_curve(g, one, AtomicLogWeight(atoms));
    ASSERT_TRUE(o.converged());
    EXPECT_LE(o.value.real(), bound);
  }
}

TEST(Curve, UniformBoundOverPlacements) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 1);
  const auto g = graph_from_knots({0, 0.5, 1}, {0, 0.4, 0});
  const double beta = 0.6, bound = 2 * (g.lipschitz() + 1) / (1 - beta);
  double worst = 0;
  for (int it = 0; it < 100; ++it) {
    const AtomicLogWeight w({{g.at(u(rng)), beta / 2}, {g.at(u(rng)), beta / 2}});
    const auto o = integrate_curve(g, one, w);
    ASSERT_TRUE(o.converged());
    worst = std::max(worst, o.value.real());
  }
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LE(worst, 3 * bound);
}

TEST(Curve, Errors) {
  const auto g = graph_from_knots({0, 1}, {0, 0});
  QuadratureOptions bad;
  bad.tol = 0;
  EXPECT_THROW(integrate_curve(g, one, {}, bad), Error);
  const auto nan = IntegrandSpec::custom("nan", [](const QuadNode&) { return cplx(NAN, 0); }, false);
  try {
    integrate_curve(g, nan, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteIntegrand);
  }
}

TEST(Domain, DiskArea) {
  const auto d = Domain::disk({0, 0}, 1);
  const auto o = integrate_domain(d, one, {});
  ASSERT_TRUE(o.converged());
  EXPECT_NEAR(o.value.real(), std::numbers::pi, 1e-6);
}

TEST(Domain, DiskDichotomy) {
  const auto d = Domain::disk({0, 0}, 1);
  for (double beta : {1.0, 1.5}) {
    const auto o = integrate_domain(d, one, AtomicLogWeight::single({0, 0}, beta));
    ASSERT_TRUE(o.converged());
    EXPECT_NEAR(o.value.real(), 2 * std::numbers::pi / (2 - beta), 1e-5);
  }
  for (double beta : {2.0, 2.5})
    EXPECT_EQ(integrate_domain(d, one, AtomicLogWeight::single({0, 0}, beta)).status, QuadStatus::Diverged);
}

TEST(Domain, PolygonWithOffCenterAtom) {
  const auto sq = Domain::polygon({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  // Atom at a corner.
  const auto o = integrate_domain(sq, one, AtomicLogWeight::single({-1, -1}, 1.0));
  ASSERT_TRUE(o.converged());
  // Oracle: integral over [0,a]^2 of 1/r is 2 a asinh(1), a = 2.
  EXPECT_NEAR(o.value.real(), 4 * std::asinh(1.0), 1e-5);
}

TEST(Inner, Examples) {
  const std::vector<Region> flat{graph_from_knots({0, 1}, {0, 0})};
  EXPECT_NEAR(std::abs(weighted_inner(flat, one, one, {}) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(weighted_inner(flat, IntegrandSpec::polynomial({0, 1}), one, {}) - 0.5), 0.0, 1e-12);
  const std::vector<Region> uni{Domain::disk({0, 0}, 1), graph_from_knots({1, 2}, {0, 0})};
  EXPECT_NEAR(std::abs(weighted_inner(uni, one, one, {}) - (std::numbers::pi + 1)), 0.0, 1e-6);
}

TEST(Inner, DivergentNorm) {
  const std::vector<Region> flat{graph_from_knots({0, 1}, {0, 0})};
  try {
    weighted_inner(flat, one, one, AtomicLogWeight::single({0.5, 0}, 1.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergentNorm);
  }
}

TEST(SingularityBound, Examples) {
  const auto g = graph_from_knots({0, 1}, {0, 0});
  const auto a = verify_singularity_bound(g, {0.5, 0}, 0.5);
  EXPECT_NEAR(a.value, 2 * std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(a.bound, 4.0, 1e-15);
  EXPECT_TRUE(a.ok);
  const auto b = verify_singularity_bound(g, {2, 0}, 0.5);
  EXPECT_NEAR(b.value, 2 * (std::sqrt(2.0) - 1), 1e-6);
  EXPECT_TRUE(b.ok);
  const auto saw = random_graph(4, 6, 3.0);
  const auto c = verify_singularity_bound(saw, {0.5, 0.2}, 0.0);
  EXPECT_NEAR(c.value, arc_length(saw), 1e-9);
  EXPECT_TRUE(c.ok);
}

TEST(Classifier, ThresholdsPinned) {
  std::vector<TracePoint> flat, affine, slow;
  for (int k = 0; k < 7; ++k) {
    const int d = depth_for_round(k);
    flat.push_back({d, 1.0});
    affine.push_back({d, 1.0 + 0.7 * d});
    slow.push_back({d, 1.0 + 1e-3 * (1 - std::pow(0.5, k))});
  }
  EXPECT_EQ(classify_trace(flat, 1e-6, true)->status, QuadStatus::Converged);
  EXPECT_EQ(classify_trace(affine, 1e-6, true)->status, QuadStatus::Diverged);
  EXPECT_EQ(classify_trace(slow, 1e-6, true)->status, QuadStatus::MaxRefinement);
}

TEST(Determinism, ThreadCountInvariant) {
  const auto g = random_graph(8, 6, 4.0);
  const AtomicLogWeight w({{g.at(0.4), 0.8}, {{0.2, 0.3}, 1.3}});
  const auto f = IntegrandSpec::abs2_polynomial({1.0, cplx(0.5, -1), 0.25});
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = integrate_curve(g, f, w);
  omp_set_num_threads(4);
  const auto b = integrate_curve(g, f, w);
  omp_set_num_threads(saved);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].value, b.trace[i].value);
}
