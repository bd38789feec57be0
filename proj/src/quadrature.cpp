#include "ml2/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "gauss.hpp"
#include "ml2/error.hpp"
#include "ml2/kernels.hpp"

namespace ml2 {

namespace {

constexpr double kOnCurveTol = 1e-12;
constexpr double kGradingRadius = 1.0;
constexpr double kBaseWidth = 0.25;

struct Singular {
  double s0 = 0;        // arc position on the segment
  int atom = -1;
  int depth = 0;
  double dist = 0;
  cplx foot_minus_atom;  // exactly zero for on-curve atoms
};

struct Break {
  double s = 0;
  int sing = -1;
};

// Appends GL nodes for offsets in [lo, hi] measured from an anchor.
template <class Emit>
void gl_panel(double lo, double hi, Emit&& emit) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  if (!(half > 0)) return;
  const double log_half = std::log(half);
  for (std::size_t m = 0; m < detail::kGLx.size(); ++m)
    emit(mid + half * detail::kGLx[m], log_half + std::log(detail::kGLw[m]));
}

// Dyadic radii 2^-j (j <= depth) below `width`, ordered outward->inward,
// ending with 0. Panels are consecutive pairs.
std::vector<double> graded_offsets(double width, int depth) {
  std::vector<double> r{width};
  for (int j = 0; j <= depth; ++j) {
    const double rj = std::ldexp(1.0, -j);
    if (rj < width) r.push_back(rj);
  }
  r.push_back(0.0);
  return r;
}

}  // namespace

std::string_view to_string(QuadStatus s) {
  switch (s) {
    case QuadStatus::Converged: return "Converged";
    case QuadStatus::Diverged: return "Diverged";
    case QuadStatus::MaxRefinement: return "MaxRefinement";
  }
  return "Unknown";
}

int depth_for_round(int round) { return 4 << round; }

int rounds_for_depth(int max_depth) {
  if (max_depth < 4) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 4");
  int k = 0;
  while (depth_for_round(k + 1) <= max_depth) ++k;
  return k + 1;
}

std::vector<QuadNode> curve_nodes(const Curve& c, const AtomicLogWeight& w, int round, int region) {
  const auto verts = curve_vertices(c);
  const auto params = curve_parameters(c);
  const bool graph = std::holds_alternative<LipschitzGraph>(c);
  const int depth = depth_for_round(round);
  const double h = std::ldexp(kBaseWidth, -round);
  const auto& atoms = w.atoms();

  std::vector<QuadNode> nodes;
  std::vector<Singular> sings;
  std::vector<Break> breaks;
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
    const cplx A = verts[i].z();
    const cplx B = verts[i + 1].z();
    const double len = std::abs(B - A);
    const cplx u = (B - A) / len;

    sings.clear();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const cplx zeta = atoms[j].where.z();
      double s0;
      if (zeta == A)
        s0 = 0.0;
      else if (zeta == B)
        s0 = len;
      else
        s0 = std::clamp(((zeta - A) * std::conj(u)).real(), 0.0, len);
      const cplx foot = s0 == len ? B : A + s0 * u;
      const double dist = std::abs(zeta - foot);
      if (dist > kGradingRadius) continue;
      const bool on = dist <= kOnCurveTol;
      const int dj = on ? depth : std::min(depth, static_cast<int>(std::ceil(std::log2(1.0 / dist))) + 2);
      if (dj <= 0) continue;
      Singular sg{s0, static_cast<int>(j), dj, on ? 0.0 : dist, on ? cplx{0.0} : foot - zeta};
      auto same = std::find_if(sings.begin(), sings.end(), [&](const Singular& o) { return o.s0 == s0; });
      if (same == sings.end()) {
        sings.push_back(sg);
      } else {
        same->depth = std::max(same->depth, dj);
        if (sg.dist < same->dist) {
          same->atom = sg.atom;
          same->dist = sg.dist;
          same->foot_minus_atom = sg.foot_minus_atom;
        }
      }
    }

    breaks.clear();
    const int nbase = std::max(1, static_cast<int>(std::ceil(len / h)));
    // Interior base breaks near a singular break are dropped so that every
    // ungraded panel stays at least h/2 away from the singularity.
    for (int k = 0; k <= nbase; ++k) {
      const double s = k == nbase ? len : len * k / nbase;
      const bool interior = k > 0 && k < nbase;
      if (interior && std::any_of(sings.begin(), sings.end(),
                                  [&](const Singular& sg) { return std::abs(sg.s0 - s) < 0.5 * h; }))
        continue;
      breaks.push_back({s, -1});
    }
    for (std::size_t q = 0; q < sings.size(); ++q) breaks.push_back({sings[q].s0, static_cast<int>(q)});
    std::stable_sort(breaks.begin(), breaks.end(), [](const Break& a, const Break& b) { return a.s < b.s; });
    // Merge breakpoints closer than round-off; singular ones win.
    std::vector<Break> merged;
    for (const auto& b : breaks) {
      if (!merged.empty() && b.s - merged.back().s <= 1e-14 * len) {
        if (b.sing >= 0) merged.back() = {merged.back().sing >= 0 ? merged.back().s : b.s, b.sing};
        continue;
      }
      merged.push_back(b);
    }

    const double t0 = graph ? 0.0 : params[i];
    auto emit_anchored = [&](double anchor_s, int sing, double sign, double lo, double hi) {
      const cplx anchor = anchor_s == len ? B : A + anchor_s * u;
      gl_panel(lo, hi, [&](double off, double log_w) {
        QuadNode n;
        n.z = anchor + (sign * off) * u;
        n.log_w = log_w;
        n.t = graph ? n.z.real() : t0 + anchor_s + sign * off;
        n.region = region;
        n.seg = static_cast<int>(i);
        if (sing >= 0) {
          n.near_atom = sings[sing].atom;
          n.near_delta = sings[sing].foot_minus_atom + (sign * off) * u;
        }
        nodes.push_back(n);
      });
    };
    auto graded = [&](double anchor_s, int sing, double sign, double width) {
      const auto r = graded_offsets(width, sings[sing].depth);
      for (std::size_t q = 0; q + 1 < r.size(); ++q) emit_anchored(anchor_s, sing, sign, r[q + 1], r[q]);
    };

    for (std::size_t p = 0; p + 1 < merged.size(); ++p) {
      const Break& a = merged[p];
      const Break& b = merged[p + 1];
      const double width = b.s - a.s;
      if (!(width > 0)) continue;
      if (a.sing < 0 && b.sing < 0) {
        emit_anchored(a.s, -1, 1.0, 0.0, width);
      } else if (a.sing >= 0 && b.sing < 0) {
        graded(a.s, a.sing, 1.0, width);
      } else if (a.sing < 0) {
        graded(b.s, b.sing, -1.0, width);
      } else {
        graded(a.s, a.sing, 1.0, 0.5 * width);
        graded(b.s, b.sing, -1.0, width - 0.5 * width);
      }
    }
  }
  return nodes;
}

std::vector<QuadNode> region_nodes(const Region& r, const AtomicLogWeight& w, int round, int region) {
  if (const auto* d = std::get_if<Domain>(&r)) return domain_nodes(*d, w, round, region);
  return curve_nodes(as_curve(r), w, round, region);
}

std::optional<QuadratureOutcome> classify_trace(const std::vector<TracePoint>& trace, double tol, bool finished) {
  QuadratureOutcome out;
  out.trace = trace;
  const std::size_t n = trace.size();
  if (n == 0) return std::nullopt;
  out.value = trace.back().value;
  out.final_round = static_cast<int>(n) - 1;
  if (n >= 2) {
    const double diff = std::abs(trace[n - 1].value - trace[n - 2].value);
    out.error_estimate = diff;
    if (diff <= tol * std::max(1.0, std::abs(trace[n - 1].value))) {
      out.status = QuadStatus::Converged;
      return out;
    }
  }
  if (n >= 6) {
    double sd = 0, sv = 0;
    for (std::size_t i = n - 4; i < n; ++i) {
      sd += trace[i].depth;
      sv += std::abs(trace[i].value);
    }
    sd /= 4;
    sv /= 4;
    double num = 0, den = 0;
    for (std::size_t i = n - 4; i < n; ++i) {
      num += (trace[i].depth - sd) * (std::abs(trace[i].value) - sv);
      den += (trace[i].depth - sd) * (trace[i].depth - sd);
    }
    const double slope = num / den;
    bool growing = true;
    double prev_inc = 0;
    for (std::size_t i = n - 3; i < n; ++i) {
      const double inc = std::abs(trace[i].value) - std::abs(trace[i - 1].value);
      if (!(inc > 0) || inc < prev_inc) growing = false;
      prev_inc = inc;
    }
    const double rise = slope * (trace[n - 1].depth - trace[n - 4].depth);
    if (growing && rise > 0.05 * std::max(1.0, std::abs(trace[n - 1].value))) {
      out.status = QuadStatus::Diverged;
      out.growth_rate = slope;
      return out;
    }
  }
  if (!finished) return std::nullopt;
  out.status = QuadStatus::MaxRefinement;
  return out;
}

namespace {

template <class Builder>
QuadratureOutcome integrate_rounds(Builder&& build, const IntegrandSpec& g, const AtomicLogWeight& w,
                                   const QuadratureOptions& opt) {
  if (!(opt.tol > 0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  const int rounds = rounds_for_depth(opt.max_depth);
  std::vector<TracePoint> trace;
  std::vector<cplx> values;
  for (int k = 0; k < rounds; ++k) {
    const std::vector<QuadNode> nodes = build(k);
    if (nodes.empty()) throw Error(ErrorKind::EmptyCurve, "region produced no quadrature nodes");
    values.assign(nodes.size(), cplx{});
    if (!kernels::evaluate(nodes, w, g, values))
      throw Error(ErrorKind::NonFiniteIntegrand, "integrand '" + g.name + "' is not finite at a node");
    trace.push_back({depth_for_round(k), kernels::pairwise_sum(values)});
    if (auto res = classify_trace(trace, opt.tol, k + 1 == rounds)) return *res;
  }
  return *classify_trace(trace, opt.tol, true);
}

}  // namespace

QuadratureOutcome integrate_curve(const Curve& c, const IntegrandSpec& g, const AtomicLogWeight& w,
                                  const QuadratureOptions& opt) {
  return integrate_rounds([&](int k) { return curve_nodes(c, w, k); }, g, w, opt);
}

QuadratureOutcome integrate_domain(const Domain& d, const IntegrandSpec& g, const AtomicLogWeight& w,
                                   const QuadratureOptions& opt) {
  return integrate_rounds([&](int k) { return domain_nodes(d, w, k); }, g, w, opt);
}

QuadratureOutcome integrate_region(const Region& r, const IntegrandSpec& g, const AtomicLogWeight& w,
                                   const QuadratureOptions& opt) {
  return integrate_rounds([&](int k) { return region_nodes(r, w, k); }, g, w, opt);
}

cplx weighted_inner(std::span<const Region> regions, const IntegrandSpec& f, const IntegrandSpec& g,
                    const AtomicLogWeight& w, const QuadratureOptions& opt) {
  auto abs2 = [](const IntegrandSpec& s) {
    return IntegrandSpec::custom("|" + s.name + "|^2", [s](const QuadNode& n) { return cplx{std::norm(s(n))}; },
                                 true);
  };
  const auto f2 = abs2(f);
  const auto g2 = abs2(g);
  const auto prod = IntegrandSpec::custom(
      f.name + "*conj(" + g.name + ")", [&](const QuadNode& n) { return f(n) * std::conj(g(n)); }, false);
  cplx total = 0.0;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (const auto* s : {&f2, &g2}) {
      const auto o = integrate_region(regions[r], *s, w, opt);
      if (!o.converged())
        throw Error(ErrorKind::DivergentNorm, "norm of '" + s->name + "' is " + std::string(to_string(o.status)) +
                                                  " on region " + std::to_string(r));
    }
    total += integrate_region(regions[r], prod, w, opt).value;
  }
  return total;
}

SingularityBoundCheck verify_singularity_bound(const LipschitzGraph& g, PlanarPoint z0, double beta, const QuadratureOptions& opt) {
  if (!(beta >= 0 && beta < 1)) throw Error(ErrorKind::InvalidArgument, "beta must lie in [0, 1)");
  const AtomicLogWeight w = beta > 0 ? AtomicLogWeight::single(z0, beta) : AtomicLogWeight{};
  const auto o = integrate_curve(g, IntegrandSpec::one(), w, opt);
  SingularityBoundCheck out;
  out.value = o.value.real();
  out.status = o.status;
  out.bound = 2.0 * (g.lipschitz() + 1.0) * std::pow(g.b() - g.a(), 1.0 - beta) / (1.0 - beta);
  out.ok = o.converged() && out.value <= out.bound;
  return out;
}

}  // namespace ml2
