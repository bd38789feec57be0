#include "ml2/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ml2/error.hpp"

namespace ml2 {

namespace {

bool finite(PlanarPoint p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double cross(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(PlanarPoint p1, PlanarPoint p2, PlanarPoint q1, PlanarPoint q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

}  // namespace

LipschitzGraph::LipschitzGraph(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size())
    throw Error(ErrorKind::LengthMismatch, "knots and values differ in length");
  if (knots_.size() < 2) throw Error(ErrorKind::LengthMismatch, "a graph needs at least two knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i]))
      throw Error(ErrorKind::InvalidArgument, "non-finite knot or value");
    if (i > 0 && !(knots_[i] > knots_[i - 1]))
      throw Error(ErrorKind::NonIncreasingKnots, "knots must be strictly increasing");
  }
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    lipschitz_ = std::max(lipschitz_, std::abs(slope(i)));
}

double LipschitzGraph::slope(std::size_t seg) const {
  return (values_[seg + 1] - values_[seg]) / (knots_[seg + 1] - knots_[seg]);
}

double LipschitzGraph::speed(std::size_t seg) const { return std::hypot(1.0, slope(seg)); }

double LipschitzGraph::y_at(double t) const {
  if (t <= knots_.front()) return values_.front();
  if (t >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double u = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return values_[i] + u * (values_[i + 1] - values_[i]);
}

std::vector<PlanarPoint> LipschitzGraph::vertices() const {
  std::vector<PlanarPoint> out(knots_.size());
  for (std::size_t i = 0; i < knots_.size(); ++i) out[i] = {knots_[i], values_[i]};
  return out;
}

LipschitzGraph LipschitzGraph::restrict(double lo, double hi) const {
  lo = std::max(lo, a());
  hi = std::min(hi, b());
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "empty restriction interval");
  std::vector<double> k{lo};
  std::vector<double> v{y_at(lo)};
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (knots_[i] > lo && knots_[i] < hi) {
      k.push_back(knots_[i]);
      v.push_back(values_[i]);
    }
  }
  k.push_back(hi);
  v.push_back(y_at(hi));
  return LipschitzGraph(std::move(k), std::move(v));
}

LipschitzGraph graph_from_knots(std::vector<double> knots, std::vector<double> values) {
  return LipschitzGraph(std::move(knots), std::move(values));
}

LipschitzGraph random_graph(unsigned long long seed, int segments, double max_slope, double a, double b) {
  if (segments < 1 || !(b > a) || !(max_slope >= 0))
    throw Error(ErrorKind::InvalidArgument, "random_graph needs segments >= 1, b > a and max_slope >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cuts{a, b};
  for (int i = 1; i < segments; ++i) cuts.push_back(a + (b - a) * (0.05 + 0.9 * unit(rng)));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> vals{0.0};
  for (std::size_t i = 1; i < cuts.size(); ++i)
    vals.push_back(vals.back() + (2.0 * unit(rng) - 1.0) * max_slope * (cuts[i] - cuts[i - 1]));
  return LipschitzGraph(std::move(cuts), std::move(vals));
}

Polyline::Polyline(std::vector<PlanarPoint> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw Error(ErrorKind::EmptyCurve, "a polyline needs at least two vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!finite(vertices_[i])) throw Error(ErrorKind::InvalidArgument, "non-finite polyline vertex");
    if (i > 0 && vertices_[i] == vertices_[i - 1])
      throw Error(ErrorKind::InvalidArgument, "consecutive polyline vertices coincide");
  }
}

double Polyline::length() const {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i)
    sum += std::hypot(vertices_[i + 1].x - vertices_[i].x, vertices_[i + 1].y - vertices_[i].y);
  return sum;
}

double signed_area(std::span<const PlanarPoint> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

bool polygon_is_simple(std::span<const PlanarPoint> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] == v[(i + 1) % n]) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

Domain Domain::disk(PlanarPoint center, double radius) {
  if (!finite(center) || !(radius > 0) || !std::isfinite(radius))
    throw Error(ErrorKind::InvalidDomain, "disk radius must be positive and finite");
  return Domain(Disk{center, radius});
}

Domain Domain::polygon(std::vector<PlanarPoint> vertices) {
  for (const auto& p : vertices)
    if (!finite(p)) throw Error(ErrorKind::InvalidDomain, "non-finite polygon vertex");
  if (!polygon_is_simple(vertices)) throw Error(ErrorKind::InvalidDomain, "polygon is not simple");
  const double a = signed_area(vertices);
  if (a == 0.0) throw Error(ErrorKind::InvalidDomain, "polygon has zero area");
  if (a < 0) std::reverse(vertices.begin(), vertices.end());
  return Domain(Polygon{std::move(vertices)});
}

double Domain::area() const {
  if (is_disk()) return std::numbers::pi * as_disk().radius * as_disk().radius;
  return signed_area(as_polygon().vertices);
}

double point_segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double u = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return std::hypot(p.x - (a.x + u * dx), p.y - (a.y + u * dy));
}

double Domain::distance_to_boundary(PlanarPoint p) const {
  if (is_disk()) {
    const auto& d = as_disk();
    return std::abs(std::hypot(p.x - d.center.x, p.y - d.center.y) - d.radius);
  }
  const auto& v = as_polygon().vertices;
  double best = INFINITY;
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
  return best;
}

bool Domain::contains(PlanarPoint p, double tol) const {
  if (is_disk()) {
    const auto& d = as_disk();
    return std::hypot(p.x - d.center.x, p.y - d.center.y) <= d.radius + tol;
  }
  if (distance_to_boundary(p) <= tol) return true;
  // Even-odd ray casting.
  const auto& v = as_polygon().vertices;
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double xc = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

std::vector<PlanarPoint> Domain::sample(std::size_t count, unsigned long long seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PlanarPoint> out;
  out.reserve(count);
  // A tenth of the samples sit on the boundary.
  const std::size_t boundary = count / 10;
  if (is_disk()) {
    const auto& d = as_disk();
    for (std::size_t i = 0; i < count; ++i) {
      const double th = 2 * std::numbers::pi * unit(rng);
      const double r = i < boundary ? d.radius : d.radius * std::sqrt(unit(rng));
      out.push_back({d.center.x + r * std::cos(th), d.center.y + r * std::sin(th)});
    }
    return out;
  }
  const auto& v = as_polygon().vertices;
  double perimeter = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    perimeter += std::hypot(v[(i + 1) % v.size()].x - v[i].x, v[(i + 1) % v.size()].y - v[i].y);
  for (std::size_t i = 0; i < boundary; ++i) {
    double s = unit(rng) * perimeter;
    for (std::size_t e = 0; e < v.size(); ++e) {
      const auto& a = v[e];
      const auto& b = v[(e + 1) % v.size()];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      if (s <= len || e + 1 == v.size()) {
        const double u = std::min(1.0, s / len);
        out.push_back({a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
        break;
      }
      s -= len;
    }
  }
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& p : v) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  while (out.size() < count) {
    const PlanarPoint p{xmin + (xmax - xmin) * unit(rng), ymin + (ymax - ymin) * unit(rng)};
    if (contains(p, 0.0)) out.push_back(p);
  }
  return out;
}

bool is_curve(const Region& r) { return !std::holds_alternative<Domain>(r); }

Curve as_curve(const Region& r) {
  if (const auto* g = std::get_if<LipschitzGraph>(&r)) return *g;
  if (const auto* p = std::get_if<Polyline>(&r)) return *p;
  throw Error(ErrorKind::InvalidArgument, "region is not a curve");
}

std::vector<PlanarPoint> curve_vertices(const Curve& c) {
  if (const auto* g = std::get_if<LipschitzGraph>(&c)) return g->vertices();
  return std::get<Polyline>(c).vertices();
}

std::vector<double> curve_parameters(const Curve& c) {
  if (const auto* g = std::get_if<LipschitzGraph>(&c)) return g->knots();
  const auto& v = std::get<Polyline>(c).vertices();
  std::vector<double> s(v.size(), 0.0);
  for (std::size_t i = 1; i < v.size(); ++i)
    s[i] = s[i - 1] + std::hypot(v[i].x - v[i - 1].x, v[i].y - v[i - 1].y);
  return s;
}

double arc_length(const LipschitzGraph& g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < g.segment_count(); ++i)
    sum += std::hypot(g.knots()[i + 1] - g.knots()[i], g.values()[i + 1] - g.values()[i]);
  return sum;
}

double arc_length(const Polyline& p) { return p.length(); }

double arc_length(const Curve& c) {
  return std::visit([](const auto& x) { return arc_length(x); }, c);
}

bool graph_distance_bound_holds(const LipschitzGraph& g, double t, PlanarPoint z0) {
  const PlanarPoint p = g.at(t);
  return std::hypot(p.x - z0.x, p.y - z0.y) >= std::abs(t - z0.x);
}

long double counterexample_alpha(int n) {
  const long double nn = n;
  return 1.0L / (nn * nn * nn);
}

long double counterexample_gap(int n) {
  const long double nn = n;
  const long double m = nn + 1;
  return 1.0L / (nn * nn * (m * m * m - 1.0L));
}

long double counterexample_b(int n) {
  // gap_k ~ k^-5, so terms past M contribute about 1/(4 M^4).
  constexpr int M = 200000;
  long double s = 0.0L;
  const long double mm = M;
  s += 1.0L / (4.0L * mm * mm * mm * mm);
  for (int k = M; k >= n; --k) s += counterexample_gap(k);
  return s;
}

CounterexampleArc counterexample_arc(int N, int K) {
  if (N < 1 || K < 1) throw Error(ErrorKind::InvalidArgument, "counterexample needs N, K >= 1");
  CounterexampleArc arc;
  std::vector<long double> b(static_cast<std::size_t>(N) + 2);
  b[static_cast<std::size_t>(N) + 1] = counterexample_b(N + 1);
  for (int n = N; n >= 1; --n) b[n] = b[n + 1] + counterexample_gap(n);
  for (int n = 1; n <= N + 1; ++n) arc.atoms.push_back({b[n], counterexample_alpha(n)});

  std::vector<PlanarPoint> verts;
  auto push = [&](long double x, long double y, ConnectorFamily fam) {
    verts.push_back({static_cast<double>(x), static_cast<double>(y)});
    if (verts.size() > 1) arc.segment_family.push_back(fam);
  };
  verts.push_back({static_cast<double>(b[1]), 0.0});

  for (int n = 1; n <= N; ++n) {
    CounterexampleBlock blk;
    blk.n = n;
    blk.b_n = b[n];
    blk.b_next = b[n + 1];
    blk.gap = counterexample_gap(n);
    const long double alpha_next = counterexample_alpha(n + 1);
    blk.exponent = 1.0L / (1.0L - alpha_next);
    blk.c_n = std::pow(blk.gap, 1.0L - alpha_next);
    blk.first_segment = arc.segment_family.size();
    const long double base = b[n + 1];
    // Heights h_k = b_n^k - b_{n+1} = gap * k^-exponent; computed directly so
    // that the tiny segments keep full relative precision.
    auto height = [&](long double k) { return blk.gap * std::pow(k, -blk.exponent); };
    for (int k = 1; k <= K; ++k) {
      const long double h = height(k);
      blk.b_nk.push_back(base + h);
      if (k % 2 == 1) {
        // Foot -> top. The foot of an odd vertical was reached by the previous
        // connector (or is the block start).
        push(base + h, h, ConnectorFamily::Vertical);
        if (k < K) {
          const long double h2 = height(k + 1);
          push(base + h2, h2, ConnectorFamily::Diagonal);
        }
      } else {
        push(base + h, 0.0L, ConnectorFamily::Vertical);
        if (k < K) {
          const long double h2 = height(k + 1);
          push(base + h2, 0.0L, ConnectorFamily::Axis);
        }
      }
    }
    // Close the truncated block at (b_{n+1}, 0); from a top this runs along
    // y = x - b_{n+1}, from a foot along the axis.
    push(base, 0.0L, ConnectorFamily::Closure);
    blk.last_segment = arc.segment_family.size();

    // Tail of the vertical series: sum_{k>K} gap k^-e, Euler-Maclaurin with
    // two correction terms.
    const long double e = blk.exponent;
    const long double kk = K;
    const long double tail_integral = std::pow(kk, 1.0L - e) / (e - 1.0L);
    const long double fK = std::pow(kk, -e);
    const long double dfK = -e * std::pow(kk, -e - 1.0L);
    blk.vertical_tail = blk.gap * (tail_integral - 0.5L * fK - dfK / 12.0L);
    arc.blocks.push_back(std::move(blk));
  }
  arc.polyline = Polyline(std::move(verts));
  return arc;
}

}  // namespace ml2
