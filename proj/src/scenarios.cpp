#include "ml2/scenarios.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "ml2/approx.hpp"
#include "ml2/error.hpp"

namespace ml2 {

using io::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Anything thrown while reading the config is a config error.
template <class F>
auto config_stage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

PlanarPoint point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::ConfigError, "points are [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

cplx complex_value(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorKind::ConfigError, "complex values are numbers or [re, im]");
}

std::vector<PlanarPoint> points(const json& j) {
  std::vector<PlanarPoint> out;
  for (const auto& p : j) out.push_back(point(p));
  return out;
}

Region geometry(const json& g) {
  const std::string kind = g.at("kind").get<std::string>();
  if (kind == "graph") return graph_from_knots(g.at("knots").get<std::vector<double>>(), g.at("values").get<std::vector<double>>());
  if (kind == "polyline") return Polyline(points(g.at("vertices")));
  if (kind == "disk") return Domain::disk(point(g.at("center")), g.at("radius").get<double>());
  if (kind == "polygon") return Domain::polygon(points(g.at("vertices")));
  if (kind == "counterexample") return counterexample_arc(g.at("N").get<int>(), g.at("K").get<int>()).polyline;
  if (kind == "csv") {
    const std::string path = g.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open curve file " + path);
    return std::visit([](auto&& c) -> Region { return c; }, io::read_curve_csv(in));
  }
  throw Error(ErrorKind::ConfigError, "unknown geometry kind '" + kind + "'");
}

std::vector<Region> regions(const json& doc) {
  std::vector<Region> out;
  if (doc.contains("regions"))
    for (const auto& g : doc.at("regions")) out.push_back(geometry(g));
  else
    out.push_back(geometry(doc.at("geometry")));
  if (out.empty()) throw Error(ErrorKind::ConfigError, "no regions given");
  return out;
}

AtomicLogWeight weight(const json& doc) {
  return doc.contains("weight") ? io::weight_from_json(doc.at("weight")) : AtomicLogWeight{};
}

double rho_value(const json& j) {
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "inf")) return kInf;
  const double r = j.get<double>();
  if (!(r > 0)) throw Error(ErrorKind::ConfigError, "rho must be positive");
  return r;
}

double default_rho(const std::vector<Region>& rs) {
  for (const auto& r : rs)
    if (is_curve(r)) return 1.0;
  return 2.0;
}

TargetFunction target(const json& t, const std::vector<Region>& rs, const AtomicLogWeight& w) {
  const std::string kind = t.at("kind").get<std::string>();
  TargetFunction f = TargetFunction::constant(0.0);
  if (kind == "polynomial") {
    std::vector<cplx> c;
    for (const auto& v : t.at("coeffs")) c.push_back(complex_value(v));
    f = TargetFunction::polynomial(std::move(c));
  } else if (kind == "exp") {
    f = TargetFunction::exp();
  } else if (kind == "cos") {
    f = TargetFunction::cos();
  } else if (kind == "abs_power") {
    f = TargetFunction::abs_power(t.at("center").get<double>(), t.at("power").get<double>());
  } else if (kind == "constant") {
    f = TargetFunction::constant(complex_value(t.at("value")));
  } else if (kind == "tabulated") {
    f = TargetFunction::tabulated(t.at("params").get<std::vector<double>>(), t.at("values").get<std::vector<double>>());
  } else if (kind == "sqrt_q") {
    if (rs.empty() || !is_curve(rs.front())) throw Error(ErrorKind::ConfigError, "sqrt_q target needs a curve");
    const double rho = t.contains("rho") ? rho_value(t.at("rho")) : 1.0;
    f = TargetFunction::sqrt_q(as_curve(rs.front()), decompose_Q(w, rs.front(), rho));
  } else {
    throw Error(ErrorKind::ConfigError, "unknown target kind '" + kind + "'");
  }
  if (t.contains("clamp")) f = clamp_target(f, t.at("clamp").get<double>());
  return f;
}

IntegrandSpec integrand(const json& doc, const std::vector<Region>& rs, const AtomicLogWeight& w) {
  if (!doc.contains("integrand")) return IntegrandSpec::one();
  const json& j = doc.at("integrand");
  if (j.is_string() && j.get<std::string>() == "one") return IntegrandSpec::one();
  if (j.at("kind").get<std::string>() == "abs2_polynomial") {
    std::vector<cplx> c;
    for (const auto& v : j.at("coeffs")) c.push_back(complex_value(v));
    return IntegrandSpec::abs2_polynomial(std::move(c));
  }
  return target(j, rs, w).integrand();
}

QuadratureOptions quad_options(const json& doc) {
  QuadratureOptions o;
  o.tol = doc.value("tol", o.tol);
  o.max_depth = doc.value("max_depth", o.max_depth);
  if (!(o.tol > 0)) throw Error(ErrorKind::ConfigError, "tol must be positive");
  if (o.max_depth < 4) throw Error(ErrorKind::ConfigError, "max_depth must be >= 4");
  return o;
}

std::vector<int> degrees(const json& doc) {
  std::vector<int> d = doc.contains("degrees") ? doc.at("degrees").get<std::vector<int>>()
                                               : std::vector<int>{doc.at("degree").get<int>()};
  if (d.empty()) throw Error(ErrorKind::ConfigError, "degrees must not be empty");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0) throw Error(ErrorKind::ConfigError, "degrees must be >= 0");
    if (i && d[i] <= d[i - 1]) throw Error(ErrorKind::ConfigError, "degrees must increase strictly");
  }
  return d;
}

double positive(const json& doc, const char* key) {
  const double v = doc.at(key).get<double>();
  if (!(v > 0)) throw Error(ErrorKind::ConfigError, std::string(key) + " must be positive");
  return v;
}

std::string trace_csv(const QuadratureOutcome& o) {
  io::Csv c({"depth", "value"});
  for (const auto& t : o.trace) c.row({std::to_string(t.depth), io::fmt(t.value.real())});
  return c.text();
}

json error_json(const Error& e) { return {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}; }

struct Output {
  json results = json::object();
  std::vector<std::pair<std::string, std::string>> csv;
  int exit_code = kExitOk;
};

// ---- commands ----

Output cmd_integrate(const json& doc) {
  const auto [rs, w, g, opt] = config_stage([&] {
    auto rs = regions(doc);
    auto w = weight(doc);
    auto g = integrand(doc, rs, w);
    return std::make_tuple(std::move(rs), std::move(w), std::move(g), quad_options(doc));
  });
  Output out;
  json outcomes = json::array();
  cplx total = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto o = integrate_region(rs[i], g, w, opt);
    outcomes.push_back(io::to_json(o));
    total += o.value;
    out.csv.emplace_back(rs.size() == 1 ? "trace" : "trace_" + std::to_string(i), trace_csv(o));
  }
  out.results["outcomes"] = outcomes;
  out.results["total"] = io::to_json(total);
  return out;
}

Output cmd_dichotomy(const json& doc) {
  struct In {
    Region region;
    AtomicLogWeight base;
    PlanarPoint at;
    std::vector<double> betas;
    QuadratureOptions opt;
  };
  const In in = config_stage([&] {
    const Region r = geometry(doc.at("geometry"));
    PlanarPoint at;
    if (doc.contains("at")) {
      at = point(doc.at("at"));
    } else if (const auto* g = std::get_if<LipschitzGraph>(&r)) {
      at = g->vertices()[g->knots().size() / 2];
    } else if (const auto* d = std::get_if<Domain>(&r); d && d->is_disk()) {
      at = d->as_disk().center;
    } else {
      throw Error(ErrorKind::ConfigError, "dichotomy needs 'at'");
    }
    auto betas = doc.at("betas").get<std::vector<double>>();
    for (double b : betas)
      if (!(b > 0)) throw Error(ErrorKind::ConfigError, "betas must be positive");
    return In{r, weight(doc), at, std::move(betas), quad_options(doc)};
  });
  const double rho = is_curve(in.region) ? 1.0 : 2.0;
  Output out;
  json cases = json::array();
  bool all = true;
  for (std::size_t i = 0; i < in.betas.size(); ++i) {
    std::vector<Atom> atoms = in.base.atoms();
    atoms.push_back({in.at, in.betas[i]});
    const AtomicLogWeight w(std::move(atoms), in.base.smooth());
    const auto o = integrate_region(in.region, IntegrandSpec::one(), w, in.opt);
    const QuadStatus expected = in.betas[i] < rho ? QuadStatus::Converged : QuadStatus::Diverged;
    const bool agree = o.status == expected;
    all = all && agree;
    cases.push_back({{"beta", in.betas[i]},
                     {"expected", std::string(to_string(expected))},
                     {"outcome", io::to_json(o)},
                     {"agree", agree}});
    out.csv.emplace_back("trace_" + std::to_string(i), trace_csv(o));
  }
  out.results = {{"threshold", rho}, {"at", {in.at.x, in.at.y}}, {"cases", cases}, {"all_agree", all}};
  if (!all) out.exit_code = kExitNumerical;
  return out;
}

Output cmd_lelong(const json& doc) {
  struct In {
    AtomicLogWeight w;
    std::vector<PlanarPoint> pts;
    std::vector<double> radii;
    int samples;
  };
  const In in = config_stage([&] {
    return In{weight(doc), points(doc.at("points")), doc.at("radii").get<std::vector<double>>(),
              doc.value("samples", 64)};
  });
  Output out;
  io::Csv csv({"point", "radius", "ratio"});
  json rows = json::array();
  for (std::size_t i = 0; i < in.pts.size(); ++i) {
    const auto k = lelong_kiselman(in.w, in.pts[i], in.radii, in.samples);
    rows.push_back({{"point", {in.pts[i].x, in.pts[i].y}},
                    {"atomic", lelong_atomic(in.w, in.pts[i])},
                    {"kiselman", k.estimate},
                    {"radii", k.radii},
                    {"ratios", k.ratios}});
    for (std::size_t j = 0; j < k.radii.size(); ++j)
      csv.row({std::to_string(i), io::fmt(k.radii[j]), io::fmt(k.ratios[j])});
  }
  out.results["points"] = rows;
  out.csv.emplace_back("lelong", csv.text());
  return out;
}

Output cmd_density(const json& doc) {
  struct In {
    std::vector<Region> rs;
    AtomicLogWeight w;
    std::vector<int> degs;
    double rho;
    FitOptions opt;
  };
  const In in = config_stage([&] {
    auto rs = regions(doc);
    const double rho = doc.contains("rho") ? rho_value(doc.at("rho")) : default_rho(rs);
    FitOptions fo;
    fo.quad = quad_options(doc);
    return In{rs, weight(doc), degrees(doc), rho, fo};
  });
  const TargetFunction f = config_stage([&] { return target(doc.at("target"), in.rs, in.w); });
  Output out;
  io::Csv csv({"degree", "residual"});
  json curve = json::array();
  for (int d : in.degs) {
    const PolyApprox p = best_poly(f, in.rs, in.w, d, in.rho, in.opt);
    curve.push_back({{"degree", d}, {"residual", p.residual_norm}, {"ill_conditioned", p.ill_conditioned},
                     {"poly", io::to_json(p)}});
    csv.row({std::to_string(d), io::fmt(p.residual_norm)});
  }
  out.results = {{"rho", std::isfinite(in.rho) ? json(in.rho) : json("inf")}, {"curve", curve}};
  out.csv.emplace_back("density", csv.text());
  return out;
}

Output cmd_sqrtq(const json& doc) {
  struct In {
    Region r;
    AtomicLogWeight w;
    std::vector<int> degs;
    double delta, rho;
    FitOptions opt;
  };
  const In in = config_stage([&] {
    const Region r = geometry(doc.at("geometry"));
    if (!is_curve(r)) throw Error(ErrorKind::ConfigError, "sqrtq needs a curve");
    FitOptions fo;
    fo.quad = quad_options(doc);
    return In{r, weight(doc), degrees(doc), positive(doc, "delta"),
              doc.contains("rho") ? rho_value(doc.at("rho")) : 1.0, fo};
  });
  const QFactorization qf = decompose_Q(in.w, in.r, in.rho);
  if (qf.trivial()) throw Error(ErrorKind::InvalidArgument, "weight has no atom with mass >= rho on the curve");
  Output out;
  io::Csv csv({"degree", "residual"});
  json rows = json::array();
  for (int d : in.degs) {
    const auto s = sqrt_q_approx(as_curve(in.r), in.w, qf, d, in.delta, in.opt);
    rows.push_back({{"degree", d},
                    {"residual", s.approx.residual_norm},
                    {"sqrt_q_norm", s.sqrt_q_norm},
                    {"cs_lhs", s.cs_lhs},
                    {"cs_rhs", s.cs_rhs},
                    {"max_abs_q", s.max_abs_q},
                    {"cutoff_measure", s.cutoff_measure},
                    {"exact_square", s.exact_square},
                    {"poly", io::to_json(s.approx)}});
    csv.row({std::to_string(d), io::fmt(s.approx.residual_norm)});
  }
  out.results["fits"] = rows;
  out.csv.emplace_back("sqrtq", csv.text());
  return out;
}

Output cmd_peak(const json& doc) {
  struct In {
    Domain d;
    AtomicLogWeight w;
    PlanarPoint p, q;
    std::vector<int> ns;
    PolyApprox base;
    QuadratureOptions opt;
  };
  const In in = config_stage([&] {
    const Region r = geometry(doc.at("geometry"));
    const auto* d = std::get_if<Domain>(&r);
    if (!d) throw Error(ErrorKind::ConfigError, "peak needs a domain");
    PolyApprox base;
    base.coeffs = {1.0};
    if (doc.contains("polynomial")) {
      base.coeffs.clear();
      for (const auto& v : doc.at("polynomial")) base.coeffs.push_back(complex_value(v));
      if (base.coeffs.empty()) throw Error(ErrorKind::ConfigError, "polynomial needs coefficients");
      base.degree = static_cast<int>(base.coeffs.size()) - 1;
    }
    auto ns = doc.at("n").get<std::vector<int>>();
    for (int n : ns)
      if (n < 1) throw Error(ErrorKind::ConfigError, "n must be >= 1");
    return In{*d, weight(doc), point(doc.at("p")), point(doc.at("q")), std::move(ns), base, quad_options(doc)};
  });
  Output out;
  io::Csv csv({"n", "norm_diff", "energy"});
  json rows = json::array();
  for (int n : in.ns) {
    const auto r = peak_modify(in.base, in.p, in.q, n, in.d, in.w, in.opt);
    rows.push_back({{"n", n},
                    {"norm_diff", r.norm_diff},
                    {"energy", r.energy},
                    {"value_at_p", io::to_json(r.value_at_p)},
                    {"max_abs_h", r.max_abs_h}});
    csv.row({std::to_string(n), io::fmt(r.norm_diff), io::fmt(r.energy)});
  }
  out.results["runs"] = rows;
  out.csv.emplace_back("peak", csv.text());
  return out;
}

Output cmd_mergelyan(const json& doc) {
  struct In {
    std::vector<UnionComponent> comps;
    AtomicLogWeight w;
    std::vector<int> degs;
    FitOptions opt;
  };
  const In in = config_stage([&] {
    In in{{}, weight(doc), degrees(doc), {}};
    in.opt.quad = quad_options(doc);
    for (const auto& c : doc.at("components")) {
      std::vector<Region> rs{geometry(c.at("geometry"))};
      in.comps.push_back({rs.front(), target(c.at("target"), rs, in.w)});
    }
    if (in.comps.empty()) throw Error(ErrorKind::ConfigError, "components must not be empty");
    return in;
  });
  Output out;
  io::Csv csv({"degree", "residual"});
  json rows = json::array();
  for (int d : in.degs) {
    const PolyApprox p = mergelyan_union(in.comps, in.w, d, in.opt);
    rows.push_back({{"degree", d}, {"residual", p.residual_norm}, {"poly", io::to_json(p)}});
    csv.row({std::to_string(d), io::fmt(p.residual_norm)});
  }
  out.results["curve"] = rows;
  out.csv.emplace_back("mergelyan", csv.text());
  return out;
}

Output cmd_carleman(const json& doc) {
  struct In {
    LipschitzGraph g;
    TargetFunction f;
    std::vector<double> budgets;
    AtomicLogWeight w;
    int cap;
    bool glue;
    FitOptions opt;
  };
  const In in = config_stage([&] {
    const Region r = geometry(doc.at("geometry"));
    const auto* g = std::get_if<LipschitzGraph>(&r);
    if (!g) throw Error(ErrorKind::ConfigError, "carleman needs a graph");
    const AtomicLogWeight w = weight(doc);
    FitOptions fo;
    fo.quad = quad_options(doc);
    const int cap = doc.value("degree_cap", 64);
    if (cap < 0) throw Error(ErrorKind::ConfigError, "degree_cap must be >= 0");
    return In{*g, target(doc.at("target"), {r}, w), doc.at("budgets").get<std::vector<double>>(), w, cap,
              doc.value("glue", false), fo};
  });
  const auto rep = carleman_window(in.g, in.f, in.budgets, in.w, in.cap, in.glue, in.opt);
  Output out;
  io::Csv csv({"segment", "budget", "achieved", "met"});
  json segs = json::array();
  for (const auto& s : rep.segments) {
    segs.push_back({{"index", s.index}, {"budget", s.budget}, {"achieved", s.achieved}, {"met", s.met}});
    csv.row({std::to_string(s.index), io::fmt(s.budget), io::fmt(s.achieved), s.met ? "1" : "0"});
  }
  out.results = {{"degree_used", rep.degree_used},
                 {"degrees_tried", rep.degrees_tried},
                 {"all_met", rep.all_met},
                 {"degree_capped", rep.degree_capped},
                 {"segments", segs},
                 {"poly", io::to_json(rep.poly)}};
  out.csv.emplace_back("carleman", csv.text());
  if (!rep.all_met) out.exit_code = kExitBudget;
  return out;
}

Output cmd_counterexample(const json& doc) {
  const auto [N, Ks, opt] = config_stage([&] {
    const int N = doc.at("N").get<int>();
    auto Ks = doc.value("K_list", std::vector<int>{1000, 10000});
    if (N < 2) throw Error(ErrorKind::ConfigError, "N must be >= 2");
    if (Ks.empty()) throw Error(ErrorKind::ConfigError, "K_list must not be empty");
    for (std::size_t i = 0; i < Ks.size(); ++i)
      if (Ks[i] < 1 || (i && Ks[i] <= Ks[i - 1])) throw Error(ErrorKind::ConfigError, "K_list must increase");
    return std::make_tuple(N, Ks, quad_options(doc));
  });
  const auto s = counterexample_suite(N, Ks, opt);
  Output out;
  io::Csv lengths({"K", "length"}), harmonic({"K", "S"}), blocks({"block", "slope"});
  json rows = json::array();
  for (const auto& r : s.rows) {
    json mono = json::array();
    for (const auto& m : r.monomials) mono.push_back(io::to_json(m));
    rows.push_back({{"K", r.K}, {"length", r.length}, {"S", r.S}, {"monomials", mono}});
    lengths.row({std::to_string(r.K), io::fmt(r.length)});
    harmonic.row({std::to_string(r.K), io::fmt(r.S)});
  }
  for (std::size_t n = 0; n < s.block_slopes.size(); ++n) blocks.row({std::to_string(n + 1), io::fmt(s.block_slopes[n])});
  out.results = {{"N", s.N},
                 {"rows", rows},
                 {"fit_slope", s.fit_slope},
                 {"fit_intercept", s.fit_intercept},
                 {"slope_limit", s.slope_limit},
                 {"block_slopes", s.block_slopes},
                 {"length_rel_change", s.length_rel_change},
                 {"assertions",
                  {{"lengths_cauchy", s.lengths_cauchy},
                   {"slope_within_15pct", s.slope_ok},
                   {"monomials_diverged", s.monomials_diverged}}}};
  out.csv.emplace_back("lengths", lengths.text());
  out.csv.emplace_back("harmonic", harmonic.text());
  out.csv.emplace_back("blocks", blocks.text());
  return out;
}

Output cmd_verify_bounds(const json& doc) {
  struct Case {
    LipschitzGraph g;
    PlanarPoint z0;
    double beta;
  };
  struct In {
    std::vector<Case> cases;
    std::vector<std::pair<double, double>> sandwich;  // (a, alpha)
    QuadratureOptions opt;
  };
  const In in = config_stage([&] {
    In in{{}, {}, quad_options(doc)};
    if (doc.contains("cases"))
      for (const auto& c : doc.at("cases")) {
        const Region r = geometry(c.at("geometry"));
        const auto* g = std::get_if<LipschitzGraph>(&r);
        if (!g) throw Error(ErrorKind::ConfigError, "bound cases need graphs");
        in.cases.push_back({*g, point(c.at("z0")), c.at("beta").get<double>()});
      }
    if (doc.contains("random")) {
      const auto& r = doc.at("random");
      const int count = r.at("count").get<int>();
      std::mt19937_64 rng(r.value("seed", 1ULL));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double L = r.value("max_lipschitz", 5.0);
      for (int i = 0; i < count; ++i) {
        const double a = -1.0 + unit(rng), b = a + 0.25 + 1.75 * unit(rng);
        const int segs = 1 + static_cast<int>(8 * unit(rng));
        const LipschitzGraph g = random_graph(rng(), segs, L * unit(rng), a, b);
        const double t0 = a + (b - a) * unit(rng);
        const PlanarPoint z0 = unit(rng) < 0.5 ? g.at(t0) : PlanarPoint{t0, g.y_at(t0) + 2.0 * unit(rng) - 1.0};
        in.cases.push_back({g, z0, 0.05 + 0.9 * unit(rng)});
      }
    }
    if (doc.contains("sandwich"))
      for (const auto& s : doc.at("sandwich")) in.sandwich.emplace_back(s.at("a").get<double>(), s.at("alpha").get<double>());
    for (const auto& c : in.cases)
      if (!(c.beta >= 0 && c.beta < 1)) throw Error(ErrorKind::ConfigError, "beta must lie in [0, 1)");
    return in;
  });
  Output out;
  io::Csv csv({"case", "value", "bound", "ok"});
  json rows = json::array();
  bool all = true;
  for (std::size_t i = 0; i < in.cases.size(); ++i) {
    const auto& c = in.cases[i];
    const auto r = verify_singularity_bound(c.g, c.z0, c.beta, in.opt);
    all = all && r.ok;
    rows.push_back({{"z0", {c.z0.x, c.z0.y}}, {"beta", c.beta}, {"lipschitz", c.g.lipschitz()},
                    {"value", r.value}, {"bound", r.bound}, {"ok", r.ok}, {"status", std::string(to_string(r.status))}});
    csv.row({std::to_string(i), io::fmt(r.value), io::fmt(r.bound), r.ok ? "1" : "0"});
  }
  json sand = json::array();
  for (const auto& [a, alpha] : in.sandwich) {
    const Polyline seg({{a, -a}, {a, a}});
    const auto o = integrate_curve(seg, IntegrandSpec::one(), AtomicLogWeight::single({0, 0}, alpha), in.opt);
    const double lo = 2.0 / std::pow(std::sqrt(2.0), alpha) * std::pow(a, 1 - alpha);
    const double hi = 2.0 * std::pow(a, 1 - alpha);
    const double slack = in.opt.tol * std::max(1.0, std::abs(o.value));
    const double v = o.value.real();
    const bool ok = o.converged() && v >= lo - slack && v <= hi + slack;
    all = all && ok;
    sand.push_back({{"a", a}, {"alpha", alpha}, {"value", v}, {"lower", lo}, {"upper", hi}, {"ok", ok}});
  }
  out.results = {{"cases", rows}, {"sandwich", sand}, {"all_ok", all}};
  out.csv.emplace_back("bounds", csv.text());
  if (!all) out.exit_code = kExitNumerical;
  return out;
}

using Handler = Output (*)(const json&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h{
      {"integrate", cmd_integrate}, {"dichotomy", cmd_dichotomy},   {"lelong", cmd_lelong},
      {"density", cmd_density},     {"sqrtq", cmd_sqrtq},           {"peak", cmd_peak},
      {"mergelyan", cmd_mergelyan}, {"carleman", cmd_carleman},     {"counterexample", cmd_counterexample},
      {"verify-bounds", cmd_verify_bounds}};
  return h;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : handlers()) n.push_back(k);
    return n;
  }();
  return names;
}

ScenarioConfig parse_config(const std::string& command, const std::string& raw) {
  const auto& cs = commands();
  if (std::find(cs.begin(), cs.end(), command) == cs.end())
    throw Error(ErrorKind::ConfigError, "unknown command '" + command + "'");
  ScenarioConfig cfg{command, raw, {}};
  try {
    cfg.doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  if (!cfg.doc.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  if (cfg.doc.contains("command") && cfg.doc.at("command") != command)
    throw Error(ErrorKind::ConfigError, "config is for command '" + cfg.doc.at("command").dump() + "'");
  return cfg;
}

std::string determinism_hash(const json& results, const std::vector<std::pair<std::string, std::string>>& csv) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  feed(results.dump());
  for (const auto& [name, text] : csv) {
    feed(name);
    feed(text);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunResult run(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  Output out;
  json err = nullptr;
  try {
    const auto& hs = handlers();
    const auto it = std::find_if(hs.begin(), hs.end(), [&](const auto& p) { return p.first == cfg.command; });
    if (it == hs.end()) throw Error(ErrorKind::ConfigError, "unknown command '" + cfg.command + "'");
    out = it->second(cfg.doc);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) {
      res.exit_code = kExitConfig;
      res.error = e.what();
      return res;
    }
    out = Output{};
    out.exit_code = kExitNumerical;
    err = error_json(e);
    res.error = e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.exit_code = out.exit_code;
  res.csv = std::move(out.csv);
  json names = json::array();
  for (const auto& [n, t] : res.csv) names.push_back(n + ".csv");
  res.report = {{"command", cfg.command},
                {"version", kVersion},
                {"config", cfg.raw},
                {"results", out.results},
                {"error", err},
                {"exit_code", res.exit_code},
                {"csv", names},
                {"threads", omp_get_max_threads()},
                {"wall_clock_seconds", secs},
                {"determinism_hash", determinism_hash(out.results, res.csv)}};
  return res;
}

void write_outputs(const RunResult& r, const std::filesystem::path& dir) {
  if (r.exit_code == kExitConfig) return;
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << r.report.dump(2) << '\n';
  for (const auto& [name, text] : r.csv) std::ofstream(dir / (name + ".csv")) << text;
}

// ---- counterexample suite ----

CounterexampleSuite counterexample_suite(int N, std::span<const int> K_list, const QuadratureOptions& opt) {
  if (N < 2) throw Error(ErrorKind::InvalidArgument, "N must be >= 2");
  if (K_list.empty()) throw Error(ErrorKind::InvalidArgument, "K_list must not be empty");
  for (std::size_t i = 0; i < K_list.size(); ++i)
    if (K_list[i] < 1 || (i && K_list[i] <= K_list[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "K_list must increase");

  CounterexampleSuite s;
  s.N = N;
  const int Kmax = K_list.back();

  // Per-segment integrals of |z - b_2|^{-alpha_2} over the verticals of block 1.
  const CounterexampleArc big = counterexample_arc(N, Kmax);
  const auto& blk = big.blocks.front();
  // Coordinates are shifted so that b_2 sits at the origin; the heights keep full precision.
  const double a2 = static_cast<double>(counterexample_alpha(2));
  const AtomicLogWeight dominant = AtomicLogWeight::single({0.0, 0.0}, a2);
  std::vector<double> terms;
  for (int k = 1; k <= Kmax; ++k) {
    const double h = static_cast<double>(blk.b_nk[k - 1] - blk.b_next);
    const Polyline seg({{h, 0.0}, {h, h}});
    terms.push_back(integrate_curve(seg, IntegrandSpec::one(), dominant, opt).value.real());
  }
  std::vector<double> partial(terms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) partial[i] = acc += terms[i];

  // J_n = integral over u in [0, 1] of (1 + u^2)^{-alpha_{n+1}/2}: unit vertical at distance 1.
  const Polyline unit({{1.0, 0.0}, {1.0, 1.0}});
  for (const auto& b : big.blocks) {
    const double a = static_cast<double>(counterexample_alpha(b.n + 1));
    const double J = integrate_curve(unit, IntegrandSpec::one(), AtomicLogWeight::single({0, 0}, a), opt).value.real();
    s.block_slopes.push_back(static_cast<double>(b.c_n) * J);
  }
  s.slope_limit = s.block_slopes.front();

  for (int K : K_list) {
    CounterexampleRow row;
    row.K = K;
    const CounterexampleArc arc = K == Kmax ? big : counterexample_arc(N, K);
    row.length = arc_length(arc.polyline);
    row.S = partial[K - 1];
    const AtomicLogWeight w = counterexample_weight(arc);
    for (int j = 0; j < 3; ++j) {
      std::vector<cplx> c(j + 1, 0.0);
      c[j] = 1.0;
      row.monomials.push_back(integrate_curve(arc.polyline, IntegrandSpec::abs2_polynomial(c), w, opt));
    }
    s.rows.push_back(std::move(row));
  }

  if (K_list.size() >= 2) {
    double sx = 0, sy = 0;
    const double n = static_cast<double>(s.rows.size());
    for (const auto& r : s.rows) {
      sx += std::log(static_cast<double>(r.K));
      sy += r.S;
    }
    sx /= n;
    sy /= n;
    double num = 0, den = 0;
    for (const auto& r : s.rows) {
      const double dx = std::log(static_cast<double>(r.K)) - sx;
      num += dx * (r.S - sy);
      den += dx * dx;
    }
    s.fit_slope = num / den;
    s.fit_intercept = sy - s.fit_slope * sx;
    const double l1 = s.rows[s.rows.size() - 2].length, l2 = s.rows.back().length;
    s.length_rel_change = std::abs(l2 - l1) / l2;
    s.lengths_cauchy = s.length_rel_change < 0.01;
    s.slope_ok = std::abs(s.fit_slope - s.slope_limit) <= 0.15 * s.slope_limit;
  }
  s.monomials_diverged = std::all_of(s.rows.back().monomials.begin(), s.rows.back().monomials.end(),
                                     [](const QuadratureOutcome& o) { return o.status == QuadStatus::Diverged; });
  return s;
}

}  // namespace ml2
