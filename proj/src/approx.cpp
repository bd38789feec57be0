#include "ml2/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ml2/error.hpp"
#include "ml2/kernels.hpp"

namespace ml2 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Columns whose orthogonalized norm drops below this fraction of their
// original norm are treated as numerically dependent.
constexpr double kRankTol = 1e-10;
constexpr double kEndpointTol = 1e-9;

// Q at a node, with the exact offset for the zero the rule was graded toward.
class NodeQ {
 public:
  NodeQ(const QFactorization& qf, const AtomicLogWeight& w) : zeros_(qf.zeros) {
    for (const auto& z : zeros_) {
      int idx = -1;
      for (std::size_t i = 0; i < w.atoms().size(); ++i)
        if (w.atoms()[i].where == z.where) idx = static_cast<int>(i);
      atom_.push_back(idx);
    }
  }

  cplx delta(std::size_t j, const QuadNode& n) const {
    return atom_[j] >= 0 && atom_[j] == n.near_atom ? n.near_delta : n.z - zeros_[j].where.z();
  }

  cplx operator()(const QuadNode& n) const {
    cplx q = 1.0;
    for (std::size_t j = 0; j < zeros_.size(); ++j) {
      const cplx d = delta(j, n);
      for (int k = 0; k < zeros_[j].multiplicity; ++k) q *= d;
    }
    return q;
  }

  // |sqrt Q| at the node.
  double sqrt_abs(const QuadNode& n) const {
    double lm = 0.0;
    for (std::size_t j = 0; j < zeros_.size(); ++j)
      lm += 0.5 * zeros_[j].multiplicity * std::log(std::abs(delta(j, n)));
    return std::exp(lm);
  }

 private:
  std::vector<QZero> zeros_;
  std::vector<int> atom_;
};

// sqrt(Q) branch normalised to the principal root at the curve start.
class Branch {
 public:
  Branch(const Curve& c, const QFactorization& qf) : branch_(c, qf), qf_(qf) {
    const auto v = curve_vertices(c);
    cplx z0 = v[0].z();
    for (const auto& zr : qf.zeros)
      if (zr.where.z() == z0) z0 = 0.5 * (v[0].z() + v[1].z());
    const double theta = branch_.total_arg(0, z0);
    const double principal = theta - kTwoPi * std::ceil((theta - std::numbers::pi) / kTwoPi);
    shift_ = principal - theta;
  }

  cplx at(std::size_t seg, cplx z) const { return branch_.eval(seg, z, shift_); }

  // Phase from the branch, modulus from the exact offsets.
  cplx at(const QuadNode& n, const NodeQ& nq) const {
    const cplx v = at(static_cast<std::size_t>(n.seg), n.z);
    const double mod = nq.sqrt_abs(n);
    if (v == 0.0) return mod == 0.0 ? cplx{0.0} : cplx{mod};
    return v * (mod / std::abs(v));
  }

 private:
  SqrtQBranch branch_;
  QFactorization qf_;
  double shift_ = 0.0;
};

// Arc position of each vertex.
std::vector<double> vertex_arc(const std::vector<PlanarPoint>& v) {
  std::vector<double> s{0.0};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) s.push_back(s.back() + std::abs(v[i + 1].z() - v[i].z()));
  return s;
}

std::pair<std::size_t, cplx> locate_arc(const std::vector<PlanarPoint>& v, const std::vector<double>& s, double pos) {
  pos = std::clamp(pos, 0.0, s.back());
  std::size_t i = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), pos) - s.begin());
  i = std::min(i == 0 ? 0 : i - 1, v.size() - 2);
  const double len = s[i + 1] - s[i];
  const double u = (pos - s[i]) / len;
  return {i, u >= 1.0 ? v[i + 1].z() : v[i].z() + u * (v[i + 1].z() - v[i].z())};
}

Polyline sub_polyline(const std::vector<PlanarPoint>& v, const std::vector<double>& s, double lo, double hi) {
  lo = std::clamp(lo, 0.0, s.back());
  hi = std::clamp(hi, 0.0, s.back());
  std::vector<PlanarPoint> out{PlanarPoint::from(locate_arc(v, s, lo).second)};
  for (std::size_t i = 0; i < v.size(); ++i)
    if (s[i] > lo && s[i] < hi && !(v[i] == out.back())) out.push_back(v[i]);
  const PlanarPoint end = PlanarPoint::from(locate_arc(v, s, hi).second);
  if (!(end == out.back())) out.push_back(end);
  return Polyline(std::move(out));
}

// Same curve with extra vertices at the given arc positions.
Curve with_breaks(const Curve& c, std::vector<double> pos) {
  const auto v = curve_vertices(c);
  const auto s = vertex_arc(v);
  std::sort(pos.begin(), pos.end());
  if (const auto* g = std::get_if<LipschitzGraph>(&c)) {
    std::vector<double> knots = g->knots();
    for (double p : pos) knots.push_back(locate_arc(v, s, p).second.real());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    knots.erase(std::remove_if(knots.begin(), knots.end(), [&](double x) { return x < g->a() || x > g->b(); }),
                knots.end());
    std::vector<double> vals;
    for (double x : knots) vals.push_back(g->y_at(x));
    return LipschitzGraph(std::move(knots), std::move(vals));
  }
  std::vector<PlanarPoint> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (; k < pos.size() && pos[k] <= s[i]; ++k) {
      const PlanarPoint q = PlanarPoint::from(locate_arc(v, s, pos[k]).second);
      if (out.empty() || !(out.back() == q)) out.push_back(q);
    }
    if (out.empty() || !(out.back() == v[i])) out.push_back(v[i]);
  }
  return Polyline(std::move(out));
}

double arc_position_of(const std::vector<PlanarPoint>& v, const std::vector<double>& s, PlanarPoint p) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == p) return s[i];
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (point_segment_distance(p, v[i], v[i + 1]) <= 1e-12) return s[i] + std::abs(p.z() - v[i].z());
  throw Error(ErrorKind::InvalidArgument, "zero of Q does not lie on the curve");
}

std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}

using Tri = std::vector<std::vector<cplx>>;  // R[i][j], upper triangular

std::vector<cplx> back_solve(const Tri& R, std::vector<cplx> b) {
  const std::size_t n = b.size();
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) b[i] -= R[i][j] * b[j];
    b[i] /= R[i][i];
  }
  return b;
}

std::vector<cplx> forward_solve_adjoint(const Tri& R, std::vector<cplx> b) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) b[i] -= std::conj(R[j][i]) * b[j];
    b[i] /= std::conj(R[i][i]);
  }
  return b;
}

// Condition number of R^H R by power and inverse iteration.
double gram_condition(const Tri& R) {
  const std::size_t n = R.size();
  if (n == 0) return 1.0;
  auto apply = [&](const std::vector<cplx>& x) {
    std::vector<cplx> y(n, 0.0), z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) y[i] += R[i][j] * x[j];
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i <= j; ++i) z[j] += std::conj(R[i][j]) * y[i];
    return z;
  };
  auto normalize = [](std::vector<cplx>& x) {
    const double s = norm2(x);
    for (auto& v : x) v /= s;
    return s;
  };
  std::vector<cplx> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = cplx{1.0, 0.1 * static_cast<double>(i)};
  normalize(x);
  double lmax = 0.0;
  for (int it = 0; it < 60; ++it) {
    x = apply(x);
    lmax = normalize(x);
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = cplx{1.0, -0.1 * static_cast<double>(i)};
  normalize(x);
  double inv = 0.0;
  for (int it = 0; it < 60; ++it) {
    x = back_solve(R, forward_solve_adjoint(R, x));
    inv = normalize(x);
  }
  return lmax * inv;
}

cplx eval_node(const PolyApprox& p, const NodeQ& nq, const QuadNode& n) {
  const cplx red = p.reduced(n.z);
  return p.qfactor ? nq(n) * red : red;
}

std::string region_label(std::size_t i) { return "component " + std::to_string(i); }

// Synthetic node at z on a region (used for endpoint comparisons).
QuadNode node_at(const Region& r, cplx z) {
  QuadNode n;
  n.z = z;
  n.t = z.real();
  if (is_curve(r)) {
    const Curve c = as_curve(r);
    const auto v = curve_vertices(c);
    const auto s = vertex_arc(v);
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      if (point_segment_distance(PlanarPoint::from(z), v[i], v[i + 1]) <= 1e-12) {
        n.seg = static_cast<int>(i);
        if (std::holds_alternative<Polyline>(c)) n.t = s[i] + std::abs(z - v[i].z());
        break;
      }
  }
  return n;
}

std::vector<cplx> curve_endpoints(const Region& r) {
  if (!is_curve(r)) return {};
  const auto v = curve_vertices(as_curve(r));
  return {v.front().z(), v.back().z()};
}

}  // namespace

// ---- targets ----

TargetFunction TargetFunction::polynomial(std::vector<cplx> coeffs) {
  int deg = 0;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != 0.0) deg = static_cast<int>(k);
  TargetFunction t("polynomial", [c = std::move(coeffs)](const QuadNode& n) { return horner(c, n.z); }, false);
  t.poly_degree_ = deg;
  return t;
}

TargetFunction TargetFunction::tabulated(std::vector<double> params, std::vector<double> values) {
  if (params.size() != values.size() || params.size() < 2)
    throw Error(ErrorKind::LengthMismatch, "tabulated target needs matching params and values (>= 2)");
  for (std::size_t i = 0; i + 1 < params.size(); ++i)
    if (!(params[i + 1] > params[i])) throw Error(ErrorKind::NonIncreasingKnots, "tabulated params must increase");
  return {"tabulated", IntegrandSpec::tabulated(std::move(params), std::move(values)).fn, true};
}

TargetFunction TargetFunction::exp() {
  return {"exp", [](const QuadNode& n) { return std::exp(n.z); }, false};
}

TargetFunction TargetFunction::cos() {
  return {"cos", [](const QuadNode& n) { return std::cos(n.z); }, false};
}

TargetFunction TargetFunction::abs_power(double center, double power) {
  return {"abs_power", [=](const QuadNode& n) { return cplx{std::pow(std::abs(n.t - center), power)}; }, true};
}

TargetFunction TargetFunction::constant(cplx c) {
  TargetFunction t("constant", [c](const QuadNode&) { return c; }, c.imag() == 0.0);
  t.poly_degree_ = 0;
  return t;
}

TargetFunction TargetFunction::sqrt_q(const Curve& curve, const QFactorization& qf) {
  auto br = std::make_shared<Branch>(curve, qf);
  return {"sqrt_q", [br](const QuadNode& n) { return br->at(static_cast<std::size_t>(std::max(n.seg, 0)), n.z); },
          false};
}

TargetFunction TargetFunction::custom(std::string name, Fn fn, bool real_valued) {
  return {std::move(name), std::move(fn), real_valued};
}

TargetFunction clamp_target(const TargetFunction& f, double level) {
  if (!f.real_valued()) throw Error(ErrorKind::InvalidArgument, "clamp needs a real-valued target");
  if (!(level > 0)) throw Error(ErrorKind::InvalidArgument, "clamp level must be positive");
  TargetFunction t("min(" + f.name() + "," + std::to_string(level) + ")",
                   [fn = f.fn_, level](const QuadNode& n) { return cplx{std::min(fn(n).real(), level)}; }, true);
  t.clamp_ = level;
  return t;
}

// ---- PolyApprox ----

cplx PolyApprox::reduced(cplx z) const { return horner(coeffs, (z - center) / scale); }

cplx PolyApprox::operator()(cplx z) const {
  const cplx r = reduced(z);
  return qfactor ? qfactor->q_at(z) * r : r;
}

std::vector<cplx> PolyApprox::expanded() const {
  std::vector<cplx> out = coeffs;
  if (!qfactor) return out;
  for (const auto& zr : qfactor->zeros) {
    const std::vector<cplx> lin{center - zr.where.z(), cplx{scale}};
    for (int k = 0; k < zr.multiplicity; ++k) out = poly_mul(out, lin);
  }
  return out;
}

cplx PolyApprox::derivative(cplx z, int k) const {
  std::vector<cplx> c = expanded();
  for (int d = 0; d < k; ++d) {
    if (c.size() <= 1) return 0.0;
    std::vector<cplx> dc(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) dc[i - 1] = static_cast<double>(i) * c[i];
    c = std::move(dc);
  }
  return horner(c, (z - center) / scale) / std::pow(scale, k);
}

int PolyApprox::total_degree() const { return degree + (qfactor ? qfactor->degree() : 0); }

// ---- fitting ----

double residual_norm(std::span<const FitComponent> comps, const PolyApprox& p, const AtomicLogWeight& w,
                     const QuadratureOptions& opt) {
  const NodeQ nq(p.qfactor ? *p.qfactor : QFactorization{}, w);
  double total = 0.0;
  for (const auto& c : comps) {
    const auto g = IntegrandSpec::custom(
        "|f-P|^2", [&](const QuadNode& n) { return cplx{std::norm(c.target(n) - eval_node(p, nq, n))}; }, true);
    total += integrate_region(c.region, g, w, opt).value.real();
  }
  return std::sqrt(std::max(total, 0.0));
}

PolyApprox fit_components(std::span<const FitComponent> comps, const AtomicLogWeight& w, int degree,
                          const FitOptions& opt) {
  if (degree < 0) throw Error(ErrorKind::InvalidArgument, "degree must be >= 0");
  if (comps.empty()) throw Error(ErrorKind::InvalidArgument, "no regions to fit on");

  std::vector<RegionThreshold> th;
  for (const auto& c : comps) th.push_back({&c.region, c.rho});
  QFactorization qf = decompose_Q(w, th);
  const NodeQ nq(qf, w);

  int round = opt.min_fit_round;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    const auto f2 = IntegrandSpec::custom(
        "|f|^2", [&](const QuadNode& n) { return cplx{std::norm(c.target(n))}; }, true);
    const auto o = integrate_region(c.region, f2, w, opt.quad);
    if (!o.converged())
      throw Error(ErrorKind::DivergentNorm, "target '" + c.target.name() + "' norm is " +
                                                std::string(to_string(o.status)) + " on " + region_label(i));
    const auto b2 = IntegrandSpec::custom("|b0|^2", [&](const QuadNode& n) { return cplx{std::norm(nq(n))}; }, true);
    const auto ob = integrate_region(c.region, b2, w, opt.quad);
    if (!ob.converged())
      throw Error(ErrorKind::DivergentNorm, "basis element 0 norm is " + std::string(to_string(ob.status)) + " on " +
                                                region_label(i) + (qf.trivial() ? " (plain basis)" : ""));
    round = std::max({round, o.final_round, ob.final_round});
  }
  round = std::min(round, rounds_for_depth(opt.quad.max_depth) - 1);

  std::vector<QuadNode> nodes;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    auto part = region_nodes(comps[i].region, w, round, static_cast<int>(i));
    owner.insert(owner.end(), part.size(), i);
    nodes.insert(nodes.end(), part.begin(), part.end());
  }
  const std::size_t N = nodes.size();

  PolyApprox out;
  out.degree = degree;
  std::vector<cplx> zs(N);
  for (std::size_t i = 0; i < N; ++i) zs[i] = nodes[i].z;
  out.center = kernels::pairwise_sum(zs, kernels::Exec::Serial) / static_cast<double>(N);
  out.scale = 0.0;
  for (const auto& z : zs) out.scale = std::max(out.scale, std::abs(z - out.center));
  if (!(out.scale > 0)) out.scale = 1.0;
  if (!qf.trivial()) out.qfactor = qf;

  // Weighted columns sqrt(W) Q u^k and right-hand side sqrt(W) f.
  const std::size_t K = static_cast<std::size_t>(degree) + 1;
  std::vector<std::vector<cplx>> cols(K, std::vector<cplx>(N));
  std::vector<cplx> rhs(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double s = std::exp(0.5 * kernels::log_density(w, nodes[i]));
    const cplx u = (nodes[i].z - out.center) / out.scale;
    cplx b = s * nq(nodes[i]);
    for (std::size_t k = 0; k < K; ++k) {
      cols[k][i] = b;
      b *= u;
    }
    rhs[i] = s * comps[owner[i]].target(nodes[i]);
    if (!std::isfinite(rhs[i].real()) || !std::isfinite(rhs[i].imag()))
      throw Error(ErrorKind::NonFiniteIntegrand, "target '" + comps[owner[i]].target.name() + "' is not finite");
  }

  // Modified Gram-Schmidt, two passes.
  std::vector<std::size_t> kept;
  Tri R;
  std::vector<std::vector<cplx>> qs;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<cplx>& v = cols[k];
    const double orig = norm2(v);
    std::vector<cplx> rk(qs.size() + 1, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < qs.size(); ++j) {
        const cplx r = inner(qs[j], v);
        for (std::size_t i = 0; i < N; ++i) v[i] -= r * qs[j][i];
        rk[j] += r;
      }
    }
    const double nv = norm2(v);
    if (!(nv > kRankTol * orig)) {
      out.ill_conditioned = true;
      continue;
    }
    rk.back() = nv;
    for (auto& x : v) x /= nv;
    for (std::size_t j = 0; j < R.size(); ++j) R[j].push_back(rk[j]);
    R.emplace_back(kept.size() + 1, 0.0);
    R.back().back() = nv;
    kept.push_back(k);
    qs.push_back(std::move(v));
  }
  // R rows are stored with full width: R[i][j] for j >= i.
  const std::size_t r = kept.size();
  Tri Rsq(r, std::vector<cplx>(r, 0.0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j) Rsq[i][j] = R[i][j];

  std::vector<cplx> d(r, 0.0);
  std::vector<cplx> y = rhs;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < r; ++j) {
      const cplx c = inner(qs[j], y);
      for (std::size_t i = 0; i < N; ++i) y[i] -= c * qs[j][i];
      d[j] += c;
    }
  }
  const auto c = back_solve(Rsq, d);
  out.coeffs.assign(K, 0.0);
  for (std::size_t j = 0; j < r; ++j) out.coeffs[kept[j]] = c[j];

  out.gram_condition = gram_condition(Rsq);
  if (out.gram_condition > opt.ill_conditioned_above) out.ill_conditioned = true;
  out.residual_norm = residual_norm(comps, out, w, opt.quad);
  return out;
}

PolyApprox best_poly(const TargetFunction& f, std::span<const Region> regions, const AtomicLogWeight& w, int degree,
                     double rho, const FitOptions& opt) {
  std::vector<FitComponent> comps;
  for (const auto& r : regions) comps.push_back({r, f, rho});
  return fit_components(comps, w, degree, opt);
}

std::vector<DensityPoint> density_curve(const TargetFunction& f, std::span<const Region> regions,
                                        const AtomicLogWeight& w, std::span<const int> degrees, double rho,
                                        const FitOptions& opt) {
  for (std::size_t i = 0; i + 1 < degrees.size(); ++i)
    if (degrees[i + 1] <= degrees[i]) throw Error(ErrorKind::InvalidArgument, "degrees must increase strictly");
  std::vector<DensityPoint> out;
  for (int d : degrees) out.push_back({d, best_poly(f, regions, w, d, rho, opt).residual_norm});
  return out;
}

// ---- sqrt(Q) reduction ----

SqrtQApprox sqrt_q_approx(const Curve& input, const AtomicLogWeight& w, const QFactorization& qf, int degree,
                          double delta, const FitOptions& opt) {
  if (!(delta > 0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  if (qf.trivial()) throw Error(ErrorKind::InvalidArgument, "Q has no zeros");
  std::vector<double> zpos;
  {
    const auto v0 = curve_vertices(input);
    const auto s0 = vertex_arc(v0);
    for (const auto& z : qf.zeros) zpos.push_back(arc_position_of(v0, s0, z.where));
  }
  std::vector<double> sorted = zpos;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    if (delta >= 0.5 * (sorted[i + 1] - sorted[i]))
      throw Error(ErrorKind::DeltaTooLarge, "delta must be below half the minimal gap between zeros");
  // Panels must break where the cut-off target has kinks.
  std::vector<double> kinks;
  for (double s : zpos)
    for (double k : {s - delta, s + delta})
      if (k > 0 && k < arc_length(input)) kinks.push_back(k);
  const Curve curve = with_breaks(input, kinks);
  const auto verts = curve_vertices(curve);
  const auto arc = vertex_arc(verts);

  const Region region = std::visit([](const auto& c) -> Region { return c; }, curve);
  const Branch branch(curve, qf);
  const NodeQ nq_phi(qf, w);
  const AtomicLogWeight& psi = qf.residual;
  const NodeQ nq_psi(qf, psi);
  SqrtQApprox out;

  const auto sq2 = IntegrandSpec::custom(
      "|sqrtQ|^2", [&](const QuadNode& n) { return cplx{std::norm(branch.at(n, nq_phi))}; }, true);
  out.sqrt_q_norm = std::sqrt(integrate_curve(curve, sq2, w, opt.quad).value.real());

  const bool even = std::all_of(qf.zeros.begin(), qf.zeros.end(), [](const QZero& z) { return z.multiplicity % 2 == 0; });
  if (even) {
    // sqrt(Q) = +-prod (z - p)^(m/2); pick the sign of the branch.
    QFactorization half;
    for (const auto& z : qf.zeros) half.zeros.push_back({z.where, z.multiplicity / 2});
    cplx z0 = verts[0].z();
    std::size_t seg0 = 0;
    for (const auto& zr : qf.zeros)
      if (zr.where.z() == z0) z0 = 0.5 * (verts[0].z() + verts[1].z());
    const cplx sign = branch.at(seg0, z0) / half.q_at(z0);
    out.exact_square = true;
    out.approx.degree = 0;
    out.approx.center = 0.0;
    out.approx.scale = 1.0;
    out.approx.coeffs = {cplx{std::round(sign.real()), 0.0}};
    out.approx.qfactor = half;
    const NodeQ nq_half(half, w);
    const auto diff = IntegrandSpec::custom(
        "|sqrtQ-P|^2",
        [&](const QuadNode& n) { return cplx{std::norm(branch.at(n, nq_phi) - eval_node(out.approx, nq_half, n))}; },
        true);
    out.approx.residual_norm = std::sqrt(integrate_curve(curve, diff, w, opt.quad).value.real());
  } else {
    // Boundary values of 1/sqrt(Q) at s_j -+ delta.
    std::vector<std::array<cplx, 2>> edge;
    for (double s : zpos) {
      std::array<cplx, 2> e{};
      for (int side = 0; side < 2; ++side) {
        const auto [seg, z] = locate_arc(verts, arc, s + (side ? delta : -delta));
        const cplx v = branch.at(seg, z);
        e[side] = v == 0.0 ? cplx{0.0} : 1.0 / v;
      }
      edge.push_back(e);
    }
    const TargetFunction g = TargetFunction::custom(
        "cutoff_inv_sqrt_q",
        [&](const QuadNode& n) -> cplx {
          const double s = arc[static_cast<std::size_t>(n.seg)] + std::abs(n.z - verts[n.seg].z());
          for (std::size_t j = 0; j < zpos.size(); ++j) {
            const double off = s - zpos[j];
            if (std::abs(off) < delta) return (std::abs(off) / delta) * edge[j][off > 0 ? 1 : 0];
          }
          return 1.0 / branch.at(n, nq_psi);
        },
        false);
    const FitComponent comp{region, g, std::numeric_limits<double>::infinity()};
    const PolyApprox A = fit_components(std::span<const FitComponent>(&comp, 1), psi, degree, opt);

    out.approx = A;
    out.approx.qfactor = qf;
    const auto diff = IntegrandSpec::custom(
        "|sqrtQ-P|^2",
        [&](const QuadNode& n) { return cplx{std::norm(branch.at(n, nq_phi) - eval_node(out.approx, nq_phi, n))}; },
        true);
    out.approx.residual_norm = std::sqrt(integrate_curve(curve, diff, w, opt.quad).value.real());

    const auto lhs = IntegrandSpec::custom(
        "cs_lhs", [&](const QuadNode& n) { return cplx{std::abs(nq_psi(n)) * std::norm(g(n) - A.reduced(n.z))}; },
        true);
    const auto rhs = IntegrandSpec::custom(
        "cs_rhs", [&](const QuadNode& n) { return cplx{std::norm(g(n) - A.reduced(n.z))}; }, true);
    const auto lo = integrate_curve(curve, lhs, psi, opt.quad);
    const auto ro = integrate_curve(curve, rhs, psi, opt.quad);

    double M = 0.0;
    for (std::size_t i = 0; i + 1 < verts.size(); ++i)
      for (int k = 0; k <= 4096; ++k) {
        const cplx z = verts[i].z() + (k / 4096.0) * (verts[i + 1].z() - verts[i].z());
        M = std::max(M, std::abs(qf.q_at(z)));
      }
    for (const auto& n : curve_nodes(curve, psi, std::max(lo.final_round, ro.final_round)))
      M = std::max(M, std::abs(nq_psi(n)));
    out.max_abs_q = M;
    out.cs_lhs = lo.value.real();
    out.cs_rhs = M * ro.value.real();
  }

  for (double s : zpos) {
    const Polyline piece = sub_polyline(verts, arc, s - delta, s + delta);
    out.cutoff_measure += integrate_curve(piece, IntegrandSpec::one(), psi, opt.quad).value.real();
  }
  return out;
}

ReducedFit reduced_sqrt_q_fit(const TargetFunction& f, const Curve& curve, const AtomicLogWeight& w, int degree,
                              double rho, const FitOptions& opt) {
  const Region region = std::visit([](const auto& c) -> Region { return c; }, curve);
  const QFactorization qf = decompose_Q(w, region, rho);
  const Branch branch(curve, qf);
  const AtomicLogWeight& psi = qf.residual;
  const NodeQ nq_psi(qf, psi);
  const NodeQ nq_phi(qf, w);
  const TargetFunction h = TargetFunction::custom(
      "f/sqrtQ", [&](const QuadNode& n) { return f(n) / branch.at(n, nq_psi); }, false);
  const FitComponent comp{region, h, std::numeric_limits<double>::infinity()};
  ReducedFit out{fit_components(std::span<const FitComponent>(&comp, 1), psi, degree, opt), 0.0};
  const auto diff = IntegrandSpec::custom(
      "|f-sqrtQ A|^2",
      [&](const QuadNode& n) { return cplx{std::norm(f(n) - branch.at(n, nq_phi) * out.approx.reduced(n.z))}; },
      true);
  out.residual = std::sqrt(integrate_curve(curve, diff, w, opt.quad).value.real());
  return out;
}

// ---- peak modification ----

cplx PeakResult::h(cplx z) const {
  const cplx ratio = z == p.z() ? cplx{1.0} : (p.z() - q.z()) / (z - q.z());
  cplx out = 1.0;
  for (int k = 0; k < n; ++k) out *= ratio;
  return out;
}

cplx PeakResult::operator()(cplx z) const { return (1.0 - h(z)) * base(z); }

PeakResult peak_modify(const PolyApprox& P, PlanarPoint p, PlanarPoint q, int n, const Domain& domain,
                       const AtomicLogWeight& w, const QuadratureOptions& opt, std::size_t samples) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  PeakResult out;
  out.base = P;
  out.p = p;
  out.q = q;
  out.n = n;
  const double rad = std::abs(p.z() - q.z());
  if (!(rad > 0)) throw Error(ErrorKind::TangencyViolated, "p and q coincide");
  if (!domain.contains(p, 1e-9)) throw Error(ErrorKind::TangencyViolated, "p is not on the closed domain");
  for (const auto& s : domain.sample(samples, 0x5eedULL)) {
    const double d = std::abs(s.z() - q.z());
    if (d < rad - 1e-9) throw Error(ErrorKind::TangencyViolated, "domain point inside the disk about q");
    out.max_abs_h = std::max(out.max_abs_h, std::abs(out.h(s.z())));
  }
  out.value_at_p = out(p.z());
  const auto g = IntegrandSpec::custom(
      "|h_n P|^2", [&](const QuadNode& nd) { return cplx{std::norm(out.h(nd.z) * P(nd.z))}; }, true);
  out.energy = integrate_domain(domain, g, w, opt).value.real();
  out.norm_diff = std::sqrt(out.energy);
  return out;
}

// ---- unions ----

PolyApprox mergelyan_union(std::span<const UnionComponent> comps, const AtomicLogWeight& w, int degree,
                           const FitOptions& opt) {
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t j = 0; j < comps.size(); ++j) {
      if (i == j) continue;
      for (const cplx z : curve_endpoints(comps[i].region)) {
        if (!atom_on_region(PlanarPoint::from(z), comps[j].region)) continue;
        const cplx a = comps[i].target(node_at(comps[i].region, z));
        const cplx b = comps[j].target(node_at(comps[j].region, z));
        if (!std::isfinite(std::abs(a)) || !std::isfinite(std::abs(b))) continue;
        if (std::abs(a - b) > kEndpointTol)
          throw Error(ErrorKind::TargetMismatch, "targets of components " + std::to_string(i) + " and " +
                                                     std::to_string(j) + " disagree at a shared point");
      }
    }
  }
  std::vector<FitComponent> fc;
  for (const auto& c : comps) fc.push_back({c.region, c.target, is_curve(c.region) ? 1.0 : 2.0});
  return fit_components(fc, w, degree, opt);
}

}  // namespace ml2
