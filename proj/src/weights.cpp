#include "ml2/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ml2/error.hpp"

namespace ml2 {

namespace {

constexpr double kOnCurveTol = 1e-12;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Signed turn from a to b in (-pi, pi]; a straight pass through the origin
// (b antiparallel to a) counts as +pi.
double turn(cplx a, cplx b) {
  const double cr = a.real() * b.imag() - a.imag() * b.real();
  const double dt = a.real() * b.real() + a.imag() * b.imag();
  if (std::abs(cr) <= 1e-12 * std::abs(a) * std::abs(b)) return dt < 0 ? std::numbers::pi : 0.0;
  return std::atan2(cr, dt);
}

}  // namespace

AtomicLogWeight::AtomicLogWeight(std::vector<Atom> atoms, std::array<double, 4> smooth) : smooth_(smooth) {
  for (double c : smooth_)
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "non-finite smooth coefficient");
  if (smooth_[3] < 0) throw Error(ErrorKind::InvalidArgument, "c3 must be >= 0 for a subharmonic background");
  for (const auto& a : atoms) {
    if (!(a.beta > 0) || !std::isfinite(a.beta))
      throw Error(ErrorKind::InvalidArgument, "atom masses must be positive");
    if (!std::isfinite(a.where.x) || !std::isfinite(a.where.y))
      throw Error(ErrorKind::InvalidArgument, "non-finite atom position");
    auto it = std::find_if(atoms_.begin(), atoms_.end(), [&](const Atom& b) { return b.where == a.where; });
    if (it != atoms_.end())
      it->beta += a.beta;
    else
      atoms_.push_back(a);
  }
}

AtomicLogWeight AtomicLogWeight::single(PlanarPoint where, double beta) {
  return AtomicLogWeight({Atom{where, beta}});
}

double AtomicLogWeight::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.beta;
  return s;
}

double phi_eval(const AtomicLogWeight& w, PlanarPoint z) {
  double s = w.smooth_at(z.z());
  for (const auto& a : w.atoms()) {
    if (a.where == z) return -std::numeric_limits<double>::infinity();
    s += a.beta * std::log(std::abs(z.z() - a.where.z()));
  }
  return s;
}

double lelong_atomic(const AtomicLogWeight& w, PlanarPoint z) {
  for (const auto& a : w.atoms())
    if (a.where == z) return a.beta;
  return 0.0;
}

KiselmanReport lelong_kiselman(const AtomicLogWeight& w, PlanarPoint z, std::span<const double> radii,
                               int samples_per_circle) {
  if (samples_per_circle < 16) throw Error(ErrorKind::InvalidArgument, "need at least 16 samples per circle");
  if (radii.empty()) throw Error(ErrorKind::InvalidArgument, "no radii given");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0) || radii[i] == 1.0) throw Error(ErrorKind::InvalidArgument, "radii must be positive and != 1");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "radii must be strictly decreasing");
  }
  double nearest = INFINITY;
  double own = 0.0;
  for (const auto& a : w.atoms()) {
    if (a.where == z)
      own = a.beta;
    else
      nearest = std::min(nearest, std::abs(a.where.z() - z.z()));
  }
  KiselmanReport rep;
  for (double r : radii) {
    if (r >= nearest) throw Error(ErrorKind::RadiusTooLarge, "radius reaches another atom");
    const double log_r = std::log(r);
    double mx = -INFINITY;
    for (int k = 0; k < samples_per_circle; ++k) {
      const double th = kTwoPi * k / samples_per_circle;
      const cplx off = std::polar(r, th);
      const cplx zeta = z.z() + off;
      // The atom at z contributes exactly beta log r on the circle.
      double v = own * log_r + w.smooth_at(zeta);
      for (const auto& a : w.atoms())
        if (!(a.where == z)) v += a.beta * std::log(std::abs(zeta - a.where.z()));
      mx = std::max(mx, v);
    }
    rep.radii.push_back(r);
    rep.ratios.push_back(mx / log_r);
  }
  rep.estimate = rep.ratios.back();
  return rep;
}

int QFactorization::degree() const {
  int d = 0;
  for (const auto& z : zeros) d += z.multiplicity;
  return d;
}

cplx QFactorization::q_at(cplx z) const {
  cplx q = 1.0;
  for (const auto& zr : zeros) {
    const cplx f = z - zr.where.z();
    for (int k = 0; k < zr.multiplicity; ++k) q *= f;
  }
  return q;
}

bool atom_on_region(PlanarPoint atom, const Region& region) {
  if (const auto* d = std::get_if<Domain>(&region)) return d->contains(atom, kOnCurveTol);
  const auto verts = curve_vertices(as_curve(region));
  for (const auto& v : verts)
    if (v == atom) return true;
  for (std::size_t i = 0; i + 1 < verts.size(); ++i)
    if (point_segment_distance(atom, verts[i], verts[i + 1]) <= kOnCurveTol) return true;
  return false;
}

QFactorization decompose_Q(const AtomicLogWeight& w, const Region& region, double rho) {
  const RegionThreshold rt{&region, rho};
  return decompose_Q(w, std::span<const RegionThreshold>(&rt, 1));
}

QFactorization decompose_Q(const AtomicLogWeight& w, std::span<const RegionThreshold> regions) {
  QFactorization qf;
  std::vector<Atom> residual;
  for (const auto& a : w.atoms()) {
    double rho = INFINITY;
    for (const auto& rt : regions)
      if (atom_on_region(a.where, *rt.region)) rho = std::min(rho, rt.rho);
    if (std::isfinite(rho) && a.beta >= rho) {
      const int m = static_cast<int>(std::floor(a.beta - rho)) + 1;
      qf.zeros.push_back({a.where, m});
      const double rest = a.beta - m;
      if (rest > 0) residual.push_back({a.where, rest});
    } else {
      residual.push_back(a);
    }
  }
  qf.residual = AtomicLogWeight(std::move(residual), w.smooth());
  return qf;
}

SqrtQBranch::SqrtQBranch(const Curve& curve, const QFactorization& qf) : zeros_(qf.zeros) {
  for (const auto& v : curve_vertices(curve)) verts_.push_back(v.z());
  for (std::size_t i = 0; i + 1 < verts_.size(); ++i) {
    const cplx d = verts_[i + 1] - verts_[i];
    dirs_.push_back(d / std::abs(d));
  }
  const std::size_t nseg = dirs_.size();
  for (const auto& zr : zeros_) {
    const cplx p = zr.where.z();
    std::vector<double> args(nseg);
    cplx v0 = verts_[0] - p;
    args[0] = v0 == 0.0 ? std::arg(dirs_[0]) : std::arg(v0);
    for (std::size_t i = 0; i + 1 < nseg; ++i) {
      const cplx base = verts_[i] == p ? dirs_[i] : verts_[i] - p;
      const cplx next = verts_[i + 1] - p;
      if (next != 0.0) {
        args[i + 1] = args[i] + turn(base, next);
      } else {
        const double before = args[i] + turn(base, -dirs_[i]);
        args[i + 1] = before + turn(-dirs_[i], dirs_[i + 1]);
      }
    }
    start_arg_.push_back(std::move(args));
  }
}

double SqrtQBranch::total_arg(std::size_t seg, cplx z) const {
  double theta = 0.0;
  for (std::size_t j = 0; j < zeros_.size(); ++j) {
    const cplx p = zeros_[j].where.z();
    const cplx base = verts_[seg] == p ? dirs_[seg] : verts_[seg] - p;
    const cplx here = z - p;
    const double a = here == 0.0 ? start_arg_[j][seg] : start_arg_[j][seg] + turn(base, here);
    theta += zeros_[j].multiplicity * a;
  }
  return theta;
}

cplx SqrtQBranch::eval(std::size_t seg, cplx z, double shift) const {
  double log_mod = 0.0;
  for (const auto& zr : zeros_) {
    const cplx here = z - zr.where.z();
    if (here == 0.0) return 0.0;
    log_mod += 0.5 * zr.multiplicity * std::log(std::abs(here));
  }
  return std::polar(std::exp(log_mod), 0.5 * (total_arg(seg, z) + shift));
}

std::vector<cplx> sqrtQ_along(const Curve& curve, const QFactorization& qf, std::span<const double> params,
                              bool require_nonzero) {
  const SqrtQBranch branch(curve, qf);
  const auto verts = curve_vertices(curve);
  const auto knots = curve_parameters(curve);
  auto locate = [&](double t) -> std::pair<std::size_t, cplx> {
    t = std::clamp(t, knots.front(), knots.back());
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    i = std::min(i, knots.size() - 2);
    const double u = (t - knots[i]) / (knots[i + 1] - knots[i]);
    const cplx a = verts[i].z(), b = verts[i + 1].z();
    return {i, u == 1.0 ? b : a + u * (b - a)};
  };

  std::vector<cplx> out;
  out.reserve(params.size());
  double shift = 0.0;
  bool fixed = false;
  for (double t : params) {
    const auto [seg, z] = locate(t);
    bool at_zero = false;
    for (const auto& zr : qf.zeros) {
      if (z == zr.where.z()) {
        at_zero = true;
        if (require_nonzero && zr.multiplicity % 2 == 1)
          throw Error(ErrorKind::SampleOnZero, "sample coincides with an odd-order zero of Q");
      }
    }
    if (!fixed && !at_zero) {
      const double theta = branch.total_arg(seg, z);
      const double principal = theta - kTwoPi * std::ceil((theta - std::numbers::pi) / kTwoPi);
      shift = principal - theta;
      fixed = true;
    }
    out.push_back(at_zero ? cplx{0.0} : branch.eval(seg, z, shift));
  }
  return out;
}

AtomicLogWeight counterexample_weight(const CounterexampleArc& arc) {
  // phi = sum alpha_n log|(z - b_n)/2|; the 1/2 becomes a constant shift.
  std::vector<Atom> atoms;
  double c0 = 0.0;
  for (const auto& a : arc.atoms) {
    atoms.push_back({{static_cast<double>(a.position), 0.0}, static_cast<double>(a.alpha)});
    c0 -= static_cast<double>(a.alpha) * std::numbers::ln2;
  }
  return AtomicLogWeight(std::move(atoms), {c0, 0, 0, 0});
}

}  // namespace ml2
