#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "gauss.hpp"
#include "ml2/error.hpp"
#include "ml2/quadrature.hpp"

namespace ml2 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMemberTol = 1e-12;

double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

// {z : dot(n, z) <= c}, n a unit outward normal.
struct HalfPlane {
  cplx n;
  double c = 0;
  double slack(cplx z) const { return c - dot(n, z); }
};

struct Piece {
  std::vector<HalfPlane> planes;
  std::optional<Disk> circle;
  std::vector<cplx> triangle;  // empty for the disk piece

  bool contains(cplx z, double tol) const {
    for (const auto& h : planes)
      if (h.slack(z) < -tol) return false;
    if (circle && std::abs(z - circle->center.z()) > circle->radius + tol) return false;
    return true;
  }
};

std::vector<HalfPlane> triangle_planes(const std::vector<cplx>& t) {
  std::vector<HalfPlane> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const cplx p = t[i], q = t[(i + 1) % 3];
    const cplx d = q - p;
    const cplx n = cplx{d.imag(), -d.real()} / std::abs(d);
    out.push_back({n, dot(n, p)});
  }
  return out;
}

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool in_triangle(cplx p, cplx a, cplx b, cplx c) {
  return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
}

// Ear clipping of a simple counter-clockwise polygon.
std::vector<std::vector<cplx>> triangulate(const std::vector<PlanarPoint>& poly) {
  std::vector<cplx> v;
  for (const auto& p : poly) v.push_back(p.z());
  std::vector<std::vector<cplx>> tris;
  while (v.size() > 3) {
    const std::size_t n = v.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n && !clipped; ++i) {
      const cplx a = v[(i + n - 1) % n], b = v[i], c = v[(i + 1) % n];
      const double turn = cross(b - a, c - b);
      if (turn == 0.0) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      if (turn < 0) continue;
      bool empty = true;
      for (std::size_t j = 0; j < n && empty; ++j) {
        if (j == i || j == (i + 1) % n || j == (i + n - 1) % n) continue;
        if (v[j] != a && v[j] != b && v[j] != c && in_triangle(v[j], a, b, c)) empty = false;
      }
      if (!empty) continue;
      tris.push_back({a, b, c});
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
    }
    if (!clipped) throw Error(ErrorKind::InvalidDomain, "polygon could not be triangulated");
  }
  if (v.size() == 3 && cross(v[1] - v[0], v[2] - v[1]) > 0) tris.push_back(v);
  return tris;
}

std::vector<Piece> convex_pieces(const Domain& d) {
  std::vector<Piece> out;
  if (d.is_disk()) {
    Piece p;
    p.circle = d.as_disk();
    out.push_back(std::move(p));
    return out;
  }
  for (auto& t : triangulate(d.as_polygon().vertices)) {
    Piece p;
    p.planes = triangle_planes(t);
    p.triangle = std::move(t);
    out.push_back(std::move(p));
  }
  return out;
}

// Distance from the ray center + r e^{i theta} to the piece boundary.
double exit_radius(const Piece& p, cplx center, cplx e) {
  double R = std::numeric_limits<double>::infinity();
  for (const auto& h : p.planes) {
    const double ne = dot(h.n, e);
    if (ne > 0) R = std::min(R, std::max(0.0, h.slack(center)) / ne);
  }
  if (p.circle) {
    const cplx d = center - p.circle->center.z();
    const double b = dot(d, e);
    const double cc = std::norm(d) - p.circle->radius * p.circle->radius;
    const double disc = b * b - cc;
    R = std::min(R, disc > 0 ? std::max(0.0, -b + std::sqrt(disc)) : 0.0);
  }
  return R;
}

// Directions from the center where R(theta) is not smooth.
std::vector<double> kink_angles(const Piece& p, cplx center) {
  std::vector<cplx> corners;
  const auto& hs = p.planes;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t j = i + 1; j < hs.size(); ++j) {
      const double det = cross(hs[i].n, hs[j].n);
      if (std::abs(det) < 1e-14) continue;
      const cplx z{(hs[i].c * hs[j].n.imag() - hs[j].c * hs[i].n.imag()) / det,
                   (hs[i].n.real() * hs[j].c - hs[j].n.real() * hs[i].c) / det};
      corners.push_back(z);
    }
    if (p.circle) {
      const cplx c0 = p.circle->center.z();
      const double off = hs[i].c - dot(hs[i].n, c0);
      const double rr = p.circle->radius * p.circle->radius - off * off;
      if (rr >= 0) {
        const cplx foot = c0 + off * hs[i].n;
        const cplx tang{-hs[i].n.imag(), hs[i].n.real()};
        corners.push_back(foot + std::sqrt(rr) * tang);
        corners.push_back(foot - std::sqrt(rr) * tang);
      }
    }
  }
  std::vector<double> out;
  const double scale = std::max(1.0, std::abs(center));
  for (const cplx z : corners) {
    if (!p.contains(z, 1e-9 * scale)) continue;
    if (std::abs(z - center) <= 1e-13 * scale) continue;
    out.push_back(std::arg(z - center));
  }
  for (const auto& h : hs) {
    if (std::abs(h.slack(center)) <= kMemberTol * scale) {
      out.push_back(std::arg(h.n) + 0.5 * std::numbers::pi);
      out.push_back(std::arg(h.n) - 0.5 * std::numbers::pi);
    }
  }
  if (p.circle) {
    const cplx d = center - p.circle->center.z();
    if (std::abs(std::abs(d) - p.circle->radius) <= kMemberTol * scale) {
      out.push_back(std::arg(d) + 0.5 * std::numbers::pi);
      out.push_back(std::arg(d) - 0.5 * std::numbers::pi);
    }
  }
  for (double& a : out) {
    a = std::fmod(a, kTwoPi);
    if (a < 0) a += kTwoPi;
  }
  return out;
}

cplx nearest_point(const Piece& p, cplx z) {
  if (p.contains(z, 0.0)) return z;
  if (p.circle) {
    const cplx c0 = p.circle->center.z();
    return c0 + p.circle->radius * (z - c0) / std::abs(z - c0);
  }
  cplx best = p.triangle[0];
  double bd = std::abs(z - best);
  for (std::size_t i = 0; i < 3; ++i) {
    const cplx a = p.triangle[i], b = p.triangle[(i + 1) % 3];
    const double s = std::clamp(dot(z - a, b - a) / std::norm(b - a), 0.0, 1.0);
    const cplx q = a + s * (b - a);
    if (std::abs(z - q) < bd) {
      bd = std::abs(z - q);
      best = q;
    }
  }
  return best;
}

cplx centroid(const Piece& p) {
  if (p.circle) return p.circle->center.z();
  return (p.triangle[0] + p.triangle[1] + p.triangle[2]) / 3.0;
}

struct Center {
  cplx z;
  int atom = -1;          // atom the rule is graded toward
  cplx offset;            // z - atom, exactly zero for an atom at the center
  int depth = 0;          // 0: uniform tau rule
};

template <class Emit>
void gl_panel(double lo, double hi, Emit&& emit) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  if (!(half > 0)) return;
  for (std::size_t m = 0; m < detail::kGLx.size(); ++m) emit(mid + half * detail::kGLx[m], half * detail::kGLw[m]);
}

std::vector<double> angle_breaks(const Piece& p, cplx center, int ntheta) {
  std::vector<double> angles;
  for (int m = 0; m <= ntheta; ++m) angles.push_back(kTwoPi * m / ntheta);
  for (double a : kink_angles(p, center)) angles.push_back(a);
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end(), [](double a, double b) { return b - a <= 1e-14; }),
               angles.end());
  return angles;
}

void polar_rule(const Piece& p, const Center& c, int round, int region, std::vector<QuadNode>& out) {
  const int refine = 1 << std::min(round, 3);
  // Levels below 2^-5 of the exit radius see only the atom's radial
  // singularity, so they use a coarser angular rule.
  constexpr int kFineLevels = 4;
  const std::vector<double> fine = angle_breaks(p, c.z, 8 * refine);
  const std::vector<double> coarse = angle_breaks(p, c.z, 8 * std::min(refine, 2));

  // tau panels on [0, 1] as (lo, hi), split by angular rule
  std::vector<std::pair<double, double>> tau_fine, tau_coarse;
  if (c.depth > 0) {
    for (int j = 0; j <= c.depth; ++j) {
      const double hi = std::ldexp(1.0, -j), lo = std::ldexp(1.0, -j - 1);
      if (j > kFineLevels) {
        tau_coarse.emplace_back(lo, hi);
        continue;
      }
      for (int s = 0; s < refine; ++s)
        tau_fine.emplace_back(lo + (hi - lo) * s / refine, lo + (hi - lo) * (s + 1) / refine);
    }
    (c.depth > kFineLevels ? tau_coarse : tau_fine).emplace_back(0.0, std::ldexp(1.0, -c.depth - 1));
  } else {
    const int nt = 4 * refine;
    for (int s = 0; s < nt; ++s) tau_fine.emplace_back(static_cast<double>(s) / nt, static_cast<double>(s + 1) / nt);
  }

  auto emit = [&](const std::vector<double>& angles, const std::vector<std::pair<double, double>>& tau) {
    for (std::size_t a = 0; a + 1 < angles.size(); ++a) {
      gl_panel(angles[a], angles[a + 1], [&](double theta, double wtheta) {
        const cplx e = std::polar(1.0, theta);
        const double R = exit_radius(p, c.z, e);
        if (!(R > 0) || !std::isfinite(R)) return;
        const double base = std::log(wtheta) + 2.0 * std::log(R);
        for (const auto& [lo, hi] : tau) {
          gl_panel(lo, hi, [&](double t, double wt) {
            const cplx step = std::polar(R * t, theta);
            QuadNode n;
            n.z = c.z + step;
            n.log_w = base + std::log(wt) + std::log(t);
            n.t = n.z.real();
            n.region = region;
            if (c.atom >= 0) {
              n.near_atom = c.atom;
              n.near_delta = c.offset + step;
            }
            out.push_back(n);
          });
        }
      });
    }
  };
  emit(fine, tau_fine);
  emit(coarse, tau_coarse);
}

}  // namespace

std::vector<QuadNode> domain_nodes(const Domain& d, const AtomicLogWeight& w, int round, int region) {
  const int depth = depth_for_round(round);
  const auto& atoms = w.atoms();
  std::vector<QuadNode> out;
  for (const Piece& piece : convex_pieces(d)) {
    std::vector<int> inside;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (piece.contains(atoms[i].where.z(), kMemberTol)) inside.push_back(static_cast<int>(i));

    if (inside.empty()) {
      Center c{centroid(piece), -1, cplx{0.0}, 0};
      double best = 1.0;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const cplx zeta = atoms[i].where.z();
        const cplx q = nearest_point(piece, zeta);
        const double dist = std::abs(q - zeta);
        if (dist <= best) {
          best = dist;
          c = {q, static_cast<int>(i), q - zeta,
               std::min(depth, static_cast<int>(std::ceil(std::log2(1.0 / dist))) + 2)};
        }
      }
      polar_rule(piece, c, round, region, out);
      continue;
    }
    for (int i : inside) {
      Piece cell = piece;
      const cplx zi = atoms[i].where.z();
      for (int j : inside) {
        if (j == i) continue;
        const cplx zj = atoms[j].where.z();
        const cplx n = (zj - zi) / std::abs(zj - zi);
        cell.planes.push_back({n, dot(n, 0.5 * (zi + zj))});
      }
      polar_rule(cell, Center{zi, i, cplx{0.0}, depth}, round, region, out);
    }
  }
  return out;
}

}  // namespace ml2
