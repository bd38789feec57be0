#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ml2/geometry.hpp"

namespace ml2 {

/// One quadrature node of an arc-length or area rule.
///
/// `near_delta` is z - zeta for the atom the rule was graded toward, carried
/// separately because z itself cannot resolve offsets below machine epsilon
/// of the atom position.
struct QuadNode {
  cplx z;
  double log_w = 0.0;  // log of the measure weight (ds or dA)
  double t = 0.0;      // graph abscissa, polyline arc position, or Re z on domains
  int region = 0;
  int seg = -1;        // curve segment, -1 on domains
  int near_atom = -1;
  cplx near_delta;
};

/// Integrand g in the integral of g e^{-phi}.
struct IntegrandSpec {
  std::function<cplx(const QuadNode&)> fn;
  std::string name;
  bool nonnegative = false;

  cplx operator()(const QuadNode& n) const { return fn(n); }

  static IntegrandSpec one();
  // Monomial coefficients in z: sum_k c_k z^k.
  static IntegrandSpec polynomial(std::vector<cplx> coeffs);
  static IntegrandSpec abs2_polynomial(std::vector<cplx> coeffs);
  // Piecewise linear in the node parameter t through (params[i], values[i]).
  static IntegrandSpec tabulated(std::vector<double> params, std::vector<double> values);
  static IntegrandSpec custom(std::string name, std::function<cplx(const QuadNode&)> fn, bool nonnegative);
};

cplx horner(std::span<const cplx> coeffs, cplx u);

}  // namespace ml2
