#include <algorithm>
#include <cmath>

#include "ml2/approx.hpp"
#include "ml2/error.hpp"

namespace ml2 {

namespace {

int next_degree(int d, int cap) { return std::min(cap, d == 0 ? 1 : 2 * d); }

int first_degree(const TargetFunction& f, int cap) {
  int d = std::min(8, cap);
  if (auto p = f.polynomial_degree()) d = std::min(d, *p);
  return d;
}

bool certified_below(const QuadratureOutcome& o, double tol, double budget) {
  const double v = o.value.real();
  return o.converged() && v + tol * std::max(1.0, v) < budget;
}

double squared_error_on(const LipschitzGraph& g, const TargetFunction& f, const PolyApprox& P,
                        const AtomicLogWeight& w, const QuadratureOptions& opt, QuadratureOutcome* outcome) {
  const auto e = IntegrandSpec::custom(
      "|F-f|^2", [&](const QuadNode& n) { return cplx{std::norm(P(n.z) - f(n))}; }, true);
  *outcome = integrate_curve(g, e, w, opt);
  return outcome->value.real();
}

}  // namespace

CarlemanReport carleman_window(const LipschitzGraph& graph, const TargetFunction& f, std::span<const double> budgets,
                               const AtomicLogWeight& w, int degree_cap, bool glue, const FitOptions& opt) {
  const double a = graph.a(), b = graph.b();
  if (a != std::round(a) || b != std::round(b))
    throw Error(ErrorKind::InvalidArgument, "window ends must be integers");
  const int n0 = static_cast<int>(a);
  const int count = static_cast<int>(b) - n0;
  if (static_cast<int>(budgets.size()) != count)
    throw Error(ErrorKind::LengthMismatch, "one budget per unit segment is required");
  for (double e : budgets)
    if (!(e > 0)) throw Error(ErrorKind::InvalidArgument, "budgets must be positive");
  if (degree_cap < 0) throw Error(ErrorKind::InvalidArgument, "degree cap must be >= 0");

  std::vector<LipschitzGraph> segs;
  for (int i = 0; i < count; ++i) segs.push_back(graph.restrict(n0 + i, n0 + i + 1));
  const double tol = opt.quad.tol;

  // Partition-of-unity glue: g = sum chi_i g_i with g_i fitted on the widened segment.
  std::vector<PolyApprox> local;
  if (glue) {
    for (int i = 0; i < count; ++i) {
      const double lo = std::max(a, static_cast<double>(n0 + i - 1));
      const double hi = std::min(b, static_cast<double>(n0 + i + 2));
      const Region J = graph.restrict(lo, hi);
      double sub = budgets[i];
      if (i > 0) sub = std::min(sub, budgets[i - 1]);
      if (i + 1 < count) sub = std::min(sub, budgets[i + 1]);
      sub /= 40.0;
      for (int d = first_degree(f, degree_cap);; d = next_degree(d, degree_cap)) {
        PolyApprox p = best_poly(f, std::span<const Region>(&J, 1), w, d, 1.0, opt);
        QuadratureOutcome o;
        squared_error_on(std::get<LipschitzGraph>(J), f, p, w, opt.quad, &o);
        const bool ok = certified_below(o, tol, sub);
        if (ok || d >= degree_cap) {
          local.push_back(std::move(p));
          break;
        }
      }
    }
  }
  auto chi = [n0, count](int i, double t) {
    const double m = n0 + i + 0.5;
    if (i == 0 && t <= m) return 1.0;
    if (i == count - 1 && t >= m) return 1.0;
    return std::max(0.0, 1.0 - std::abs(t - m));
  };
  const TargetFunction glued = TargetFunction::custom(
      "glued",
      [&](const QuadNode& n) {
        cplx s = 0.0;
        for (int i = 0; i < count; ++i) {
          const double c = chi(i, n.t);
          if (c > 0) s += c * local[i](n.z);
        }
        return s;
      },
      f.real_valued());
  const TargetFunction& target = glue ? glued : f;

  CarlemanReport rep;
  const Region whole = graph;
  for (int d = first_degree(f, degree_cap);; d = next_degree(d, degree_cap)) {
    rep.degrees_tried.push_back(d);
    PolyApprox F = best_poly(target, std::span<const Region>(&whole, 1), w, d, 1.0, opt);
    std::vector<SegmentBudget> rows;
    bool all = true;
    for (int i = 0; i < count; ++i) {
      QuadratureOutcome o;
      const double e = squared_error_on(segs[i], f, F, w, opt.quad, &o);
      const bool met = certified_below(o, tol, budgets[i]);
      all = all && met;
      rows.push_back({n0 + i, budgets[i], e, met});
    }
    rep.segments = std::move(rows);
    rep.poly = std::move(F);
    rep.degree_used = d;
    rep.all_met = all;
    if (all) break;
    if (d >= degree_cap) {
      rep.degree_capped = true;
      break;
    }
  }
  return rep;
}

}  // namespace ml2
