#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ml2/geometry.hpp"
#include "ml2/nodes.hpp"
#include "ml2/quadrature.hpp"
#include "ml2/weights.hpp"

namespace ml2 {

/// Target f of a fit, evaluated at quadrature nodes.
///
/// abs_power uses the node parameter t (graph abscissa, polyline arc
/// position, Re z on domains).
class TargetFunction {
 public:
  using Fn = std::function<cplx(const QuadNode&)>;

  static TargetFunction polynomial(std::vector<cplx> coeffs);
  static TargetFunction tabulated(std::vector<double> params, std::vector<double> values);
  static TargetFunction exp();
  static TargetFunction cos();
  static TargetFunction abs_power(double center, double power);
  static TargetFunction constant(cplx c);
  // Continuous branch of sqrt(Q) along the curve.
  static TargetFunction sqrt_q(const Curve& curve, const QFactorization& qf);
  static TargetFunction custom(std::string name, Fn fn, bool real_valued);

  cplx operator()(const QuadNode& n) const { return fn_(n); }
  const std::string& name() const { return name_; }
  bool real_valued() const { return real_; }
  std::optional<int> polynomial_degree() const { return poly_degree_; }
  std::optional<double> clamp_level() const { return clamp_; }
  IntegrandSpec integrand() const { return IntegrandSpec::custom(name_, fn_, false); }

 private:
  TargetFunction(std::string name, Fn fn, bool real) : name_(std::move(name)), fn_(std::move(fn)), real_(real) {}
  friend TargetFunction clamp_target(const TargetFunction& f, double level);

  std::string name_;
  Fn fn_;
  bool real_ = false;
  std::optional<int> poly_degree_;
  std::optional<double> clamp_;
};

// Pointwise min(f, level) of a real target.
TargetFunction clamp_target(const TargetFunction& f, double level);

/// P(z) = Q(z) * sum_k coeffs[k] ((z - center) / scale)^k, Q = 1 without qfactor.
struct PolyApprox {
  int degree = 0;
  cplx center;
  double scale = 1.0;
  std::vector<cplx> coeffs;
  std::optional<QFactorization> qfactor;
  double residual_norm = 0.0;
  double gram_condition = 1.0;
  bool ill_conditioned = false;

  cplx operator()(cplx z) const;
  cplx reduced(cplx z) const;  // without the Q factor
  // Coefficients of the full polynomial in u = (z - center) / scale.
  std::vector<cplx> expanded() const;
  // k-th derivative in z.
  cplx derivative(cplx z, int k) const;
  int total_degree() const;
};

struct FitOptions {
  QuadratureOptions quad;
  double ill_conditioned_above = 1e12;
  int min_fit_round = 4;
};

struct FitComponent {
  Region region;
  TargetFunction target;
  double rho = 1.0;  // integrability threshold used by the Q decomposition
};

// Least-squares fit of one polynomial over all components in the summed
// weighted norm. Throws DivergentNorm if a target or the lowest basis
// element has a divergent norm on some component.
PolyApprox fit_components(std::span<const FitComponent> comps, const AtomicLogWeight& w, int degree,
                          const FitOptions& opt = {});

// rho = infinity forces the plain monomial basis.
PolyApprox best_poly(const TargetFunction& f, std::span<const Region> regions, const AtomicLogWeight& w,
                     int degree, double rho, const FitOptions& opt = {});

struct DensityPoint {
  int degree = 0;
  double residual = 0.0;
};

std::vector<DensityPoint> density_curve(const TargetFunction& f, std::span<const Region> regions,
                                        const AtomicLogWeight& w, std::span<const int> degrees, double rho,
                                        const FitOptions& opt = {});

// Weighted norm of f - P over the components, by fresh quadrature.
double residual_norm(std::span<const FitComponent> comps, const PolyApprox& p, const AtomicLogWeight& w,
                     const QuadratureOptions& opt = {});

struct SqrtQApprox {
  PolyApprox approx;       // P = Q A; residual_norm is ||sqrt(Q) - P|| in phi
  double sqrt_q_norm = 0;  // ||sqrt(Q)|| in phi
  double cs_lhs = 0;       // integral of |sqrt Q|^2 |g - A|^2 e^{-psi}
  double cs_rhs = 0;       // max |Q| times integral of |g - A|^2 e^{-psi}
  double max_abs_q = 0;
  double cutoff_measure = 0;  // integral of e^{-psi} over the delta-arcs
  bool exact_square = false;  // every multiplicity even: sqrt(Q) is itself a polynomial
};

SqrtQApprox sqrt_q_approx(const Curve& curve, const AtomicLogWeight& w, const QFactorization& qf, int degree,
                          double delta, const FitOptions& opt = {});

// Fit A to f / sqrt(Q) in the residual weight psi and report ||f - sqrt(Q) A|| in phi.
struct ReducedFit {
  PolyApprox approx;
  double residual = 0;
};
ReducedFit reduced_sqrt_q_fit(const TargetFunction& f, const Curve& curve, const AtomicLogWeight& w, int degree,
                              double rho, const FitOptions& opt = {});

struct PeakResult {
  PolyApprox base;
  PlanarPoint p;
  PlanarPoint q;
  int n = 1;
  double norm_diff = 0;   // ||P~ - P||
  double energy = 0;      // ||P~ - P||^2
  cplx value_at_p;
  double max_abs_h = 0;   // over the tangency samples

  cplx h(cplx z) const;
  cplx operator()(cplx z) const;  // (1 - h_n) P
};

PeakResult peak_modify(const PolyApprox& P, PlanarPoint p, PlanarPoint q, int n, const Domain& domain,
                       const AtomicLogWeight& w, const QuadratureOptions& opt = {}, std::size_t samples = 10000);

struct UnionComponent {
  Region region;
  TargetFunction target;
};

// rho = 1 on curves and 2 on domains.
PolyApprox mergelyan_union(std::span<const UnionComponent> comps, const AtomicLogWeight& w, int degree,
                           const FitOptions& opt = {});

struct SegmentBudget {
  int index = 0;
  double budget = 0;
  double achieved = 0;
  bool met = false;
};

struct CarlemanReport {
  int degree_used = 0;
  std::vector<SegmentBudget> segments;
  bool all_met = false;
  bool degree_capped = false;
  std::vector<int> degrees_tried;
  PolyApprox poly;
};

// graph spans [n0, n1 + 1] with integer segment boundaries; budgets[i] is
// the budget of segment n0 + i. A segment counts as met only when the
// achieved error plus the quadrature tolerance stays below its budget.
CarlemanReport carleman_window(const LipschitzGraph& graph, const TargetFunction& f, std::span<const double> budgets,
                               const AtomicLogWeight& w, int degree_cap, bool glue, const FitOptions& opt = {});

}  // namespace ml2
