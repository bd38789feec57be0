#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace ml2 {

using cplx = std::complex<double>;

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  cplx z() const { return {x, y}; }
  static PlanarPoint from(cplx z) { return {z.real(), z.imag()}; }
  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Graph {(t, y(t)) : a <= t <= b} of a piecewise linear function.
///
/// The arc element on segment i is sqrt(1 + slope_i^2), so it lies in
/// [1, sqrt(1 + L^2)] with L the largest absolute slope.
class LipschitzGraph {
 public:
  LipschitzGraph(std::vector<double> knots, std::vector<double> values);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double lipschitz() const { return lipschitz_; }
  double a() const { return knots_.front(); }
  double b() const { return knots_.back(); }
  std::size_t segment_count() const { return knots_.size() - 1; }

  double slope(std::size_t seg) const;
  double speed(std::size_t seg) const;  // |gamma'(t)| on the segment
  double y_at(double t) const;
  PlanarPoint at(double t) const { return {t, y_at(t)}; }
  std::vector<PlanarPoint> vertices() const;

  // Sub-graph over [lo, hi] (clamped to [a, b]); knots inside are kept.
  LipschitzGraph restrict(double lo, double hi) const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double lipschitz_ = 0.0;
};

LipschitzGraph graph_from_knots(std::vector<double> knots, std::vector<double> values);

// Random graph over [a, b] with `segments` pieces of random width and slopes
// drawn from [-max_slope, max_slope].
LipschitzGraph random_graph(unsigned long long seed, int segments, double max_slope, double a = 0.0, double b = 1.0);

class Polyline {
 public:
  explicit Polyline(std::vector<PlanarPoint> vertices);

  const std::vector<PlanarPoint>& vertices() const { return vertices_; }
  std::size_t segment_count() const { return vertices_.size() - 1; }
  double length() const;

 private:
  std::vector<PlanarPoint> vertices_;
};

struct Disk {
  PlanarPoint center;
  double radius = 1.0;
};

struct Polygon {
  std::vector<PlanarPoint> vertices;  // counter-clockwise after validation
};

class Domain {
 public:
  static Domain disk(PlanarPoint center, double radius);
  static Domain polygon(std::vector<PlanarPoint> vertices);

  bool is_disk() const { return std::holds_alternative<Disk>(shape_); }
  const Disk& as_disk() const { return std::get<Disk>(shape_); }
  const Polygon& as_polygon() const { return std::get<Polygon>(shape_); }

  double area() const;
  // Closed-domain membership with absolute slack `tol`.
  bool contains(PlanarPoint p, double tol = 1e-12) const;
  double distance_to_boundary(PlanarPoint p) const;
  // Deterministic pseudo-random points of the closed domain (interior + boundary).
  std::vector<PlanarPoint> sample(std::size_t count, unsigned long long seed) const;

 private:
  explicit Domain(std::variant<Disk, Polygon> shape) : shape_(std::move(shape)) {}
  std::variant<Disk, Polygon> shape_;
};

using Curve = std::variant<LipschitzGraph, Polyline>;
using Region = std::variant<LipschitzGraph, Polyline, Domain>;

bool is_curve(const Region& r);
Curve as_curve(const Region& r);

// Vertices in traversal order (graphs become their vertex polyline).
std::vector<PlanarPoint> curve_vertices(const Curve& c);

// Curve parameter at a vertex: abscissa for graphs, arc position for polylines.
std::vector<double> curve_parameters(const Curve& c);

double arc_length(const LipschitzGraph& g);
double arc_length(const Polyline& p);
double arc_length(const Curve& c);

// |gamma(t) - z0| >= |t - t0| for a graph point gamma(t) and any z0 = (t0, y0).
bool graph_distance_bound_holds(const LipschitzGraph& g, double t, PlanarPoint z0);

double point_segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b);
bool polygon_is_simple(std::span<const PlanarPoint> vertices);
double signed_area(std::span<const PlanarPoint> vertices);

// Explicit rectifiable non-Lipschitz arc: blocks n = 1..N of K vertical
// segments accumulating at b_{n+1}, joined by diagonal and axis connectors.
enum class ConnectorFamily { Vertical, Diagonal, Axis, Closure };

struct CounterexampleBlock {
  int n = 0;
  long double b_n = 0;
  long double b_next = 0;
  long double gap = 0;      // b_n - b_{n+1}
  long double c_n = 0;      // gap^(1 - alpha_{n+1})
  long double exponent = 0; // 1 / (1 - alpha_{n+1})
  std::vector<long double> b_nk;       // k = 1..K
  std::size_t first_segment = 0;       // polyline segment range [first, last)
  std::size_t last_segment = 0;
  long double vertical_tail = 0;       // sum_{k>K} (b_n^k - b_{n+1})
};

struct CounterexampleAtom {
  long double position = 0;  // b_n on the real axis
  long double alpha = 0;     // 1/n^3
};

struct CounterexampleArc {
  Polyline polyline{{{0, 0}, {1, 0}}};
  std::vector<CounterexampleAtom> atoms;         // n = 1..N+1
  std::vector<CounterexampleBlock> blocks;       // n = 1..N
  std::vector<ConnectorFamily> segment_family;   // one per polyline segment
};

long double counterexample_alpha(int n);
long double counterexample_gap(int n);   // b_n - b_{n+1}
long double counterexample_b(int n);     // tail sum of gaps
CounterexampleArc counterexample_arc(int N, int K);

}  // namespace ml2
