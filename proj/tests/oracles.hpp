#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's quadrature or fitting code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using ld = long double;
using lcplx = std::complex<ld>;

struct Pt {
  ld x = 0, y = 0;
};

// Density at anchor + off. Passing the two parts separately lets a density
// with a singularity at the anchor resolve offsets far below its ulp.
using Density = std::function<ld(Pt anchor, Pt off)>;

struct Node {
  lcplx z;
  ld w = 0;  // measure weight including e^{-phi}
  ld t = 0;  // graph abscissa
};

// Midpoint rule on [0, 1] after s = u^p, which flattens s^{-beta} endpoint
// singularities when p (1 - beta) >= 1. Returns nodes along A -> B graded
// toward A only.
inline void graded_half(Pt A, Pt B, ld p, long n, const Density& dens, std::vector<Node>& out) {
  const ld dx = B.x - A.x, dy = B.y - A.y, len = std::hypot(dx, dy);
  for (long i = 0; i < n; ++i) {
    const ld u = (static_cast<ld>(i) + 0.5L) / static_cast<ld>(n);
    const ld s = std::pow(u, p);
    const ld ds = len * p * std::pow(u, p - 1) / static_cast<ld>(n);
    const Pt off{s * dx, s * dy};
    const Pt z{A.x + off.x, A.y + off.y};
    out.push_back({{z.x, z.y}, ds * dens(A, off), z.x});
  }
}

// Segment A -> B graded toward both ends (split at the midpoint).
inline void graded_segment(Pt A, Pt B, ld p, long n, const Density& dens, std::vector<Node>& out) {
  const Pt M{(A.x + B.x) / 2, (A.y + B.y) / 2};
  graded_half(A, M, p, n / 2, dens, out);
  graded_half(B, M, p, n / 2, dens, out);
}

// Nodes along a polyline, split additionally at the break points (which must
// lie on the polyline), graded toward every piece end.
inline std::vector<Node> polyline_nodes(std::vector<Pt> verts, const std::vector<Pt>& breaks, ld p, long total,
                                        const Density& dens) {
  std::vector<Pt> v{verts.front()};
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
    const Pt A = verts[i], B = verts[i + 1];
    // Cut at the break points themselves so a pole there stays exactly at a piece end.
    std::vector<std::pair<ld, Pt>> cut;
    for (const Pt& q : breaks) {
      const ld dx = B.x - A.x, dy = B.y - A.y;
      const ld s = ((q.x - A.x) * dx + (q.y - A.y) * dy) / (dx * dx + dy * dy);
      const ld ex = A.x + s * dx - q.x, ey = A.y + s * dy - q.y;
      if (s > 1e-15L && s < 1 - 1e-15L && std::hypot(ex, ey) < 1e-12L) cut.push_back({s, q});
    }
    std::sort(cut.begin(), cut.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& c : cut) v.push_back(c.second);
    v.push_back(B);
  }
  std::vector<Node> out;
  const long per = total / static_cast<long>(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) graded_segment(v[i], v[i + 1], p, per, dens, out);
  return out;
}

inline ld sum_weights(const std::vector<Node>& ns) {
  ld s = 0;
  for (const auto& n : ns) s += n.w;
  return s;
}

// |z - c|^{-beta}.
inline Density pole(Pt c, ld beta) {
  return [=](Pt a, Pt off) { return std::pow(std::hypot((a.x - c.x) + off.x, (a.y - c.y) + off.y), -beta); };
}

// Weighted least-squares residuals ||f - m P_d|| for each requested degree d,
// with P_d ranging over polynomials of degree d. The basis m z^k is built by
// Arnoldi orthogonalization against the discrete inner product, which keeps
// the solve well conditioned at high degree.
// If fitted is given it receives the best approximation at the last degree, per node.
inline std::vector<ld> ls_residuals(const std::vector<Node>& ns, const std::function<lcplx(const Node&)>& f,
                                    const std::function<lcplx(lcplx)>& m, const std::vector<int>& degrees,
                                    std::vector<lcplx>* fitted = nullptr) {
  const std::size_t n = ns.size();
  lcplx c = 0;
  ld wsum = 0;
  for (const auto& q : ns) {
    c += q.w * q.z;
    wsum += q.w;
  }
  c /= wsum;
  ld scale = 0;
  for (const auto& q : ns) scale = std::max(scale, std::abs(q.z - c));
  auto dot = [&](const std::vector<lcplx>& a, const std::vector<lcplx>& b) {
    lcplx s = 0;
    for (std::size_t i = 0; i < n; ++i) s += ns[i].w * std::conj(a[i]) * b[i];
    return s;
  };
  std::vector<lcplx> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = f(ns[i]);
  std::vector<std::vector<lcplx>> Q;
  std::vector<lcplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = m(ns[i].z);
  std::vector<ld> out;
  const int dmax = degrees.empty() ? -1 : degrees.back();
  std::size_t next = 0;
  for (int d = 0; d <= dmax; ++d) {
    if (d > 0)
      for (std::size_t i = 0; i < n; ++i) v[i] = Q.back()[i] * (ns[i].z - c) / scale;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : Q) {
        const lcplx h = dot(q, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= h * q[i];
      }
    const ld nv = std::sqrt(std::real(dot(v, v)));
    for (auto& x : v) x /= nv;
    Q.push_back(v);
    const lcplx a = dot(v, r);
    for (std::size_t i = 0; i < n; ++i) r[i] -= a * v[i];
    if (next < degrees.size() && degrees[next] == d) {
      out.push_back(std::sqrt(std::real(dot(r, r))));
      ++next;
    }
  }
  if (fitted) {
    fitted->resize(n);
    for (std::size_t i = 0; i < n; ++i) (*fitted)[i] = f(ns[i]) - r[i];
  }
  return out;
}

// Integral over the unit disk of |(2 - z)^{-n}|^2 dA via the Bergman series
// (2 - z)^{-n} = 2^{-n} sum_k C(n+k-1, k) (z/2)^k and ||z^k||^2 = pi / (k+1).
inline ld peak_energy_disk(int n) {
  ld total = 0, coef = 1;  // C(n+k-1, k) 2^{-k}
  for (int k = 0; k < 4000; ++k) {
    if (k > 0) coef *= static_cast<ld>(n + k - 1) / static_cast<ld>(k) / 2;
    total += coef * coef / static_cast<ld>(k + 1);
  }
  return std::numbers::pi_v<ld> * std::pow(4.0L, -n) * total;
}

// J(alpha) = integral over [0, 1] of (1 + u^2)^{-alpha/2} du, trapezoid with m points.
inline ld unit_vertical(ld alpha, long m = 1000000) {
  ld s = 0;
  for (long i = 0; i <= m; ++i) {
    const ld u = static_cast<ld>(i) / static_cast<ld>(m);
    const ld f = std::pow(1 + u * u, -alpha / 2);
    s += (i == 0 || i == m) ? f / 2 : f;
  }
  return s / static_cast<ld>(m);
}

// Counterexample block parameters computed from the closed-form formulas.
inline ld alpha(int n) { return 1.0L / (static_cast<ld>(n) * n * n); }
inline ld gap(int n) { return 1.0L / (static_cast<ld>(n) * n * ((n + 1.0L) * (n + 1.0L) * (n + 1.0L) - 1)); }

// S_K = sum_{k <= K} integral over the k-th vertical of block 1 of |z - b_2|^{-alpha_2};
// each vertical of height h contributes h^{1 - alpha_2} J(alpha_2).
inline std::vector<ld> harmonic_partials(int Kmax) {
  const ld a2 = alpha(2), e = 1 / (1 - a2), J = unit_vertical(a2);
  std::vector<ld> S;
  ld acc = 0;
  for (int k = 1; k <= Kmax; ++k) {
    const ld h = gap(1) * std::pow(static_cast<ld>(k), -e);
    acc += std::pow(h, 1 - a2) * J;
    S.push_back(acc);
  }
  return S;
}

// Least-squares slope of y against x.
inline ld slope(const std::vector<ld>& x, const std::vector<ld>& y) {
  ld mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  ld num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

// Length of the truncated arc: per block, K verticals, the connectors between
// them and the closing segment, summed in extended precision.
inline ld counterexample_length(int N, int K) {
  ld total = 0;
  for (int n = 1; n <= N; ++n) {
    const ld e = 1 / (1 - alpha(n + 1));
    auto h = [&](int k) { return gap(n) * std::pow(static_cast<ld>(k), -e); };
    for (int k = 1; k <= K; ++k) {
      total += h(k);
      if (k < K) total += (k % 2 == 1) ? std::sqrt(2.0L) * (h(k) - h(k + 1)) : h(k) - h(k + 1);
    }
    total += (K % 2 == 1) ? std::sqrt(2.0L) * h(K) : h(K);
  }
  return total;
}

}  // namespace oracle
