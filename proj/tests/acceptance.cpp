// Acceptance gate. `acceptance --criterion N` runs one criterion and prints one
// line; without arguments all criteria run in order.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ml2/approx.hpp"
#include "ml2/error.hpp"
#include "ml2/io.hpp"
#include "ml2/scenarios.hpp"
#include "oracles.hpp"

using namespace ml2;
using io::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned tolerances and limits.
constexpr double kC1RelTol = 1e-5;
constexpr long kC1OracleNodes = 1000000;
constexpr double kC1Seconds = 5;
constexpr double kC2Abs = 1e-4;
constexpr double kC2Seconds = 5;
constexpr int kC3Configs = 50;
constexpr double kC3Seconds = 10;
constexpr double kC4Decay = 0.1;
constexpr double kC4OracleRel = 0.05;
constexpr long kC4OracleNodes = 100000;
constexpr double kC4Seconds = 30;
constexpr double kC5Rel = 0.05;
constexpr double kC5Seconds = 30;
constexpr double kC6ValueAbs = 1e-14;
constexpr double kC6Ratio = 0.5;
constexpr std::size_t kC6Samples = 10000;
constexpr double kC6Seconds = 10;
constexpr double kC7Decay = 1e-2;
constexpr double kC7Seconds = 60;
constexpr int kC8Cap = 64;
constexpr double kC8Tighten = 1e6;
constexpr double kC8Seconds = 60;
constexpr double kC9Cauchy = 0.01;
constexpr double kC9Slope = 0.15;
constexpr double kC9Seconds = 120;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  json results = json::object();

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
};

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

class Clock {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop() { total_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }
  double seconds() const { return total_; }

 private:
  std::chrono::steady_clock::time_point t0_;
  double total_ = 0;
};

template <class F>
auto timed(Clock& c, F&& f) {
  c.start();
  auto r = f();
  c.stop();
  return r;
}

void check_runtime(Outcome& o, const Clock& c, double limit) {
  o.check(c.seconds() < limit, "runtime " + num(c.seconds()) + " s < " + num(limit) + " s");
}

std::vector<oracle::Pt> pts(const LipschitzGraph& g) {
  std::vector<oracle::Pt> v;
  for (const auto& p : g.vertices()) v.push_back({p.x, p.y});
  return v;
}

LipschitzGraph sawtooth() { return graph_from_knots({0, 0.25, 0.5, 0.75, 1}, {0, 0.5, 0, 0.5, 0}); }

// ---- 1: arc dichotomy ----
Outcome criterion1(bool with_oracles) {
  Outcome o;
  Clock clock;
  struct Case {
    std::string name;
    LipschitzGraph g;
    double t;
  };
  const std::vector<Case> cases{{"flat", graph_from_knots({0, 1}, {0, 0}), 0.5},
                                {"sawtooth", sawtooth(), 0.4},
                                {"random", random_graph(2024, 6, 5.0), 0.37}};
  o.check(cases[1].g.lipschitz() == 2.0, "sawtooth L = 2");
  o.check(cases[2].g.lipschitz() <= 5.0, "random L = " + num(cases[2].g.lipschitz()) + " <= 5");
  for (const auto& c : cases) {
    const PlanarPoint z0 = c.g.at(c.t);
    for (double beta : {0.25, 0.5, 0.9, 1.0, 1.3}) {
      const auto w = AtomicLogWeight::single(z0, beta);
      const auto r = timed(clock, [&] { return integrate_curve(c.g, IntegrandSpec::one(), w); });
      o.results[c.name].push_back(io::to_json(r));
      const std::string tag = c.name + " beta=" + num(beta);
      if (beta < 1) {
        o.check(r.status == QuadStatus::Converged, tag + " Converged");
        if (with_oracles) {
          const auto ns = oracle::polyline_nodes(pts(c.g), {{z0.x, z0.y}}, 2 / (1 - beta), kC1OracleNodes,
                                                 oracle::pole({z0.x, z0.y}, beta));
          const double want = static_cast<double>(oracle::sum_weights(ns));
          const double rel = std::abs(r.value.real() - want) / want;
          o.check(rel <= kC1RelTol, tag + " rel err " + num(rel));
        }
      } else {
        o.check(r.status == QuadStatus::Diverged && r.growth_rate > 0,
                tag + " Diverged, rate " + num(r.growth_rate));
      }
    }
  }
  check_runtime(o, clock, kC1Seconds);
  return o;
}

// ---- 2: area dichotomy ----
Outcome criterion2(bool) {
  Outcome o;
  Clock clock;
  const auto d = Domain::disk({0, 0}, 1);
  for (double beta : {1.0, 1.9, 2.0, 2.5}) {
    const auto r = timed(clock, [&] {
      return integrate_domain(d, IntegrandSpec::one(), AtomicLogWeight::single({0, 0}, beta));
    });
    o.results["disk"].push_back(io::to_json(r));
    const std::string tag = "beta=" + num(beta);
    if (beta < 2) {
      o.check(r.converged(), tag + " Converged");
      if (beta == 1.0) {
        const double err = std::abs(r.value.real() - 2 * std::numbers::pi);
        o.check(err <= kC2Abs, tag + " |value - 2 pi| = " + num(err));
      }
    } else {
      o.check(r.status == QuadStatus::Diverged, tag + " Diverged");
    }
  }
  check_runtime(o, clock, kC2Seconds);
  return o;
}

// ---- 3: single-singularity bound and vertical sandwich ----
Outcome criterion3(bool) {
  Outcome o;
  Clock clock;
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(0, 1);
  int ok = 0;
  for (int i = 0; i < kC3Configs; ++i) {
    const double a = -1 + u(rng), b = a + 0.25 + 1.75 * u(rng);
    const auto g = random_graph(rng(), 1 + static_cast<int>(8 * u(rng)), 5 * u(rng), a, b);
    const double t0 = a + (b - a) * u(rng);
    const PlanarPoint z0 = u(rng) < 0.5 ? g.at(t0) : PlanarPoint{t0, g.y_at(t0) + 2 * u(rng) - 1};
    const double beta = 0.05 + 0.9 * u(rng);
    const auto r = timed(clock, [&] { return verify_singularity_bound(g, z0, beta); });
    const double bound = 2 * (g.lipschitz() + 1) * std::pow(b - a, 1 - beta) / (1 - beta);
    const bool good = r.status == QuadStatus::Converged && r.value <= bound;
    ok += good;
    if (!good)
      o.notes.push_back("info config " + std::to_string(i) + ": " + std::string(to_string(r.status)) + " value " + num(r.value) +
             " bound " + num(bound));
    o.results["random"].push_back({r.value, bound});
  }
  o.check(ok == kC3Configs, std::to_string(ok) + "/" + std::to_string(kC3Configs) + " random configs within bound");
  const QuadratureOptions qo;
  for (double a : {0.1, 1.0})
    for (double alpha : {0.3, 0.7}) {
      const Polyline seg({{a, -a}, {a, a}});
      const auto r = timed(clock, [&] {
        return integrate_curve(seg, IntegrandSpec::one(), AtomicLogWeight::single({0, 0}, alpha), qo);
      });
      const double v = r.value.real();
      const double lo = 2 / std::pow(std::sqrt(2.0), alpha) * std::pow(a, 1 - alpha), hi = 2 * std::pow(a, 1 - alpha);
      const double slack = qo.tol * std::max(1.0, v);
      o.results["sandwich"].push_back({a, alpha, v});
      o.check(r.converged() && v >= lo - slack && v <= hi + slack,
              "sandwich a=" + num(a) + " alpha=" + num(alpha) + ": " + num(lo) + " <= " + num(v) + " <= " + num(hi));
    }
  check_runtime(o, clock, kC3Seconds);
  return o;
}

// ---- 4: density on the sawtooth ----
Outcome criterion4(bool with_oracles) {
  Outcome o;
  Clock clock;
  const auto g = sawtooth();
  const std::vector<Region> rs{g};
  const PlanarPoint p = g.at(0.5);
  const auto f = TargetFunction::abs_power(0.5, 0.6);
  const std::vector<int> degs{1, 2, 4, 8, 16};
  auto oracle_curve = [&](double beta, bool with_q) {
    const auto ns = oracle::polyline_nodes(pts(g), {}, 4, kC4OracleNodes, oracle::pole({p.x, p.y}, beta));
    const oracle::lcplx zp(p.x, p.y);
    return oracle::ls_residuals(
        ns, [](const oracle::Node& n) { return oracle::lcplx(std::pow(std::abs(n.t - 0.5L), 0.6L)); },
        [&](oracle::lcplx z) { return with_q ? z - zp : oracle::lcplx(1); }, degs);
  };
  auto check_curve = [&](const std::vector<DensityPoint>& c, const std::string& tag, double beta, bool with_q) {
    bool positive = true, nonincreasing = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
      positive = positive && c[i].residual > 0;
      if (i) nonincreasing = nonincreasing && c[i].residual <= c[i - 1].residual;
      o.results[tag].push_back(c[i].residual);
    }
    o.check(positive, tag + " strictly positive");
    o.check(nonincreasing, tag + " nonincreasing");
    if (!with_oracles) return;
    const auto want = oracle_curve(beta, with_q);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double rel = std::abs(c[i].residual - static_cast<double>(want[i])) / static_cast<double>(want[i]);
      o.check(rel <= kC4OracleRel, tag + " E" + std::to_string(degs[i]) + " = " + num(c[i].residual) +
                                       " vs oracle " + num(static_cast<double>(want[i])));
    }
  };

  const auto w05 = AtomicLogWeight::single(p, 0.5);
  const auto c05 = timed(clock, [&] { return density_curve(f, rs, w05, degs, 1.0); });
  check_curve(c05, "beta0.5", 0.5, false);
  const double ratio = c05.back().residual / c05.front().residual;
  o.check(ratio < kC4Decay, "E16/E1 = " + num(ratio) + " < " + num(kC4Decay));

  const auto w15 = AtomicLogWeight::single(p, 1.5);
  bool divergent = false;
  clock.start();
  try {
    best_poly(f, rs, w15, 1, kInf);
  } catch (const Error& e) {
    divergent = e.kind() == ErrorKind::DivergentNorm;
  }
  clock.stop();
  o.check(divergent, "beta=1.5 plain basis raises DivergentNorm");
  const auto c15 = timed(clock, [&] { return density_curve(f, rs, w15, degs, 1.0); });
  check_curve(c15, "beta1.5", 1.5, true);
  check_runtime(o, clock, kC4Seconds);
  return o;
}

// ---- 5: direct Q-basis fit against the reduced sqrt(Q) fit ----
Outcome criterion5(bool) {
  Outcome o;
  Clock clock;
  const auto g = sawtooth();
  const std::vector<Region> rs{g};
  const auto w = AtomicLogWeight::single(g.at(0.5), 1.5);
  const auto f = TargetFunction::abs_power(0.5, 0.6);
  for (int d : {8, 16}) {
    const auto direct = timed(clock, [&] { return best_poly(f, rs, w, d, 1.0); });
    const auto reduced = timed(clock, [&] { return reduced_sqrt_q_fit(f, g, w, d, 1.0); });
    const double rel = std::abs(direct.residual_norm - reduced.residual) / direct.residual_norm;
    o.results["degrees"].push_back({d, direct.residual_norm, reduced.residual});
    o.check(rel <= kC5Rel, "degree " + std::to_string(d) + ": direct " + num(direct.residual_norm) + " reduced " +
                               num(reduced.residual) + " rel diff " + num(rel));
  }
  check_runtime(o, clock, kC5Seconds);
  return o;
}

// ---- 6: peak modification ----
Outcome criterion6(bool with_oracles) {
  Outcome o;
  Clock clock;
  const auto d = Domain::disk({0, 0}, 1);
  PolyApprox one;
  one.coeffs = {1.0};
  std::vector<PeakResult> rs;
  for (int n : {10, 20}) {
    rs.push_back(timed(clock, [&] { return peak_modify(one, {1, 0}, {2, 0}, n, d, {}, {}, kC6Samples); }));
    const auto& r = rs.back();
    o.results["runs"].push_back({n, r.norm_diff, r.energy, r.max_abs_h});
    o.check(std::abs(r.value_at_p) <= kC6ValueAbs, "n=" + std::to_string(n) + " |P~(p)| = " + num(std::abs(r.value_at_p)));
    double worst = 0;
    for (const auto& z : d.sample(kC6Samples, 0xacce97)) worst = std::max(worst, std::abs(r.h(z.z())));
    o.check(r.max_abs_h <= 1 && worst <= 1, "n=" + std::to_string(n) + " max |h_n| = " + num(std::max(worst, r.max_abs_h)));
    if (with_oracles) {
      const double want = static_cast<double>(oracle::peak_energy_disk(n));
      o.check(std::abs(r.energy - want) <= 1e-6 * want,
              "n=" + std::to_string(n) + " squared norm " + num(r.energy) + " vs series " + num(want));
    }
  }
  const double ratio = rs[1].norm_diff / rs[0].norm_diff;
  o.check(ratio < kC6Ratio, "norm_diff(20)/norm_diff(10) = " + num(ratio) + " < " + num(kC6Ratio));
  o.notes.push_back("info squared-norm ratio " + num(rs[1].energy / rs[0].energy));
  check_runtime(o, clock, kC6Seconds);
  return o;
}

// Taylor remainder exp(z) - T_20(z), summed directly.
oracle::lcplx exp_tail(oracle::lcplx z) {
  oracle::lcplx term = 1, s = 0;
  for (int k = 1; k <= 80; ++k) {
    term *= z / static_cast<oracle::ld>(k);
    if (k > 20) s += term;
  }
  return s;
}

// ---- 7: Mergelyan union ----
Outcome criterion7(bool with_oracles) {
  Outcome o;
  Clock clock;
  const AtomicLogWeight w({}, {0, 0, 0, 0.25});
  const std::vector<UnionComponent> comps{{Domain::disk({0, 0}, 1), TargetFunction::exp()},
                                          {graph_from_knots({1, 2}, {0, 0}), TargetFunction::exp()}};
  const auto p5 = timed(clock, [&] { return mergelyan_union(comps, w, 5); });
  const auto p20 = timed(clock, [&] { return mergelyan_union(comps, w, 20); });
  o.results = {p5.residual_norm, p20.residual_norm};
  const double ratio = p20.residual_norm / p5.residual_norm;
  o.check(ratio < kC7Decay, "E20/E5 = " + num(ratio) + " < " + num(kC7Decay));
  if (with_oracles) {
    // Feasible competitor T_20: its weighted norm bounds E_20 from above.
    using oracle::ld;
    const int nr = 2000, nt = 2000, ns = 200000;
    ld disk = 0;
    for (int i = 0; i < nr; ++i) {
      const ld r = (i + 0.5L) / nr;
      for (int j = 0; j < nt; ++j) {
        const ld th = 2 * std::numbers::pi_v<ld> * (j + 0.5L) / nt;
        const oracle::lcplx z = std::polar(r, th);
        disk += std::norm(exp_tail(z)) * std::exp(-0.25L * r * r) * r;
      }
    }
    disk *= (1.0L / nr) * (2 * std::numbers::pi_v<ld> / nt);
    ld seg = 0;
    for (int i = 0; i < ns; ++i) {
      const ld x = 1 + (i + 0.5L) / ns;
      seg += std::norm(exp_tail(x)) * std::exp(-0.25L * x * x);
    }
    seg /= ns;
    const double bound = static_cast<double>(std::sqrt(disk + seg));
    o.results.push_back(bound);
    o.check(p20.residual_norm <= bound, "E20 = " + num(p20.residual_norm) + " <= Taylor bound " + num(bound));
  }
  check_runtime(o, clock, kC7Seconds);
  return o;
}

// ---- 8: Carleman window ----
Outcome criterion8(bool) {
  Outcome o;
  Clock clock;
  const auto g = graph_from_knots({-2, -1, 0, 1, 2}, {0, 0, 0, 0, 0});
  std::vector<double> budgets, tight;
  for (int n = -2; n <= 1; ++n) {
    budgets.push_back(std::pow(10.0, -2 - std::abs(n)));
    tight.push_back(budgets.back() / kC8Tighten);
  }
  const auto rep = timed(clock, [&] { return carleman_window(g, TargetFunction::cos(), budgets, {}, kC8Cap, false); });
  o.check(rep.all_met && !rep.degree_capped, "all_met at degree " + std::to_string(rep.degree_used));
  bool below = true;
  for (const auto& s : rep.segments) {
    below = below && s.achieved < s.budget;
    o.results["loose"].push_back({s.index, s.budget, s.achieved});
  }
  o.check(below, "achieved strictly below every budget");
  const auto t = timed(clock, [&] { return carleman_window(g, TargetFunction::cos(), tight, {}, kC8Cap, false); });
  for (const auto& s : t.segments) o.results["tight"].push_back({s.index, s.budget, s.achieved});
  o.check(t.degree_capped && !t.all_met, "tightened budgets report degree_capped");
  check_runtime(o, clock, kC8Seconds);
  return o;
}

// ---- 9: counterexample ----
Outcome criterion9(bool with_oracles) {
  Outcome o;
  Clock clock;
  const std::vector<int> Ks{1000, 10000};
  const auto s = timed(clock, [&] { return counterexample_suite(6, Ks); });
  const double l1 = s.rows[0].length, l2 = s.rows[1].length;
  const double change = std::abs(l2 - l1) / l2;
  o.results = {l1, l2, s.rows[0].S, s.rows[1].S, s.fit_slope, s.block_slopes};
  o.check(change < kC9Cauchy, "lengths " + num(l1) + " vs " + num(l2) + " rel change " + num(change) + " < " +
                                  num(kC9Cauchy));
  if (with_oracles) {
    const auto S = oracle::harmonic_partials(Ks.back());
    const oracle::ld want = oracle::slope({std::log(1000.0L), std::log(10000.0L)}, {S[999], S[9999]});
    const double rel = std::abs(s.fit_slope - static_cast<double>(want)) / static_cast<double>(want);
    o.check(rel <= kC9Slope, "S_K slope " + num(s.fit_slope) + " vs oracle " + num(static_cast<double>(want)));
    const double lw = static_cast<double>(oracle::counterexample_length(6, Ks.back()));
    o.notes.push_back("info length oracle " + num(lw));
  }
  bool diverged = true;
  for (const auto& m : s.rows.back().monomials) diverged = diverged && m.status == QuadStatus::Diverged;
  o.check(diverged, "monomials 1, z, z^2 Diverged at K = 10^4");
  check_runtime(o, clock, kC9Seconds);
  return o;
}

using Criterion = std::function<Outcome(bool)>;
const std::vector<Criterion> kCriteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                       criterion6, criterion7, criterion8, criterion9};

// ---- 10: determinism across runs and thread counts ----
Outcome criterion10(bool) {
  Outcome o;
  const int saved = omp_get_max_threads();
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    std::vector<std::string> hashes;
    for (int threads : {4, 4, 1}) {
      omp_set_num_threads(threads);
      const auto r = kCriteria[i](false);
      hashes.push_back(determinism_hash(r.results, {}));
    }
    o.results["hashes"].push_back(hashes);
    o.check(hashes[0] == hashes[1] && hashes[0] == hashes[2],
            "criterion " + std::to_string(i + 1) + " hash " + hashes[0] +
                (hashes[0] == hashes[1] && hashes[0] == hashes[2] ? "" : " differs"));
  }
  omp_set_num_threads(saved);
  return o;
}

int report(int n, const Outcome& o) {
  std::string failed, info;
  for (const auto& s : o.notes) {
    if (s.rfind("FAILED ", 0) == 0) failed += (failed.empty() ? "" : "; ") + s.substr(7);
    if (s.rfind("info ", 0) == 0) info += (info.empty() ? "" : "; ") + s.substr(5);
  }
  std::printf("criterion %d: %s", n, o.pass ? "PASS" : "FAIL");
  if (!failed.empty()) std::printf(" [%s]", failed.c_str());
  if (!info.empty()) std::printf(" (%s)", info.c_str());
  std::printf("\n");
  for (const auto& s : o.notes) std::printf("    %s\n", s.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

int run_one(int n) {
  try {
    if (n == 10) return report(n, criterion10(false));
    return report(n, kCriteria.at(static_cast<std::size_t>(n - 1))(true));
  } catch (const std::exception& e) {
    std::printf("criterion %d: FAIL [exception: %s]\n", n, e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
    const int n = std::atoi(argv[2]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "criterion must be 1..10\n");
      return 2;
    }
    return run_one(n);
  }
  if (argc != 1) {
    std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
    return 2;
  }
  int rc = 0;
  for (int n = 1; n <= 10; ++n) rc |= run_one(n);
  return rc;
}
