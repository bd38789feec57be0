#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ml2/geometry.hpp"
#include "ml2/nodes.hpp"
#include "ml2/weights.hpp"

namespace ml2 {

enum class QuadStatus { Converged, Diverged, MaxRefinement };
std::string_view to_string(QuadStatus s);

struct TracePoint {
  int depth = 0;
  cplx value;
};

struct QuadratureOutcome {
  QuadStatus status = QuadStatus::MaxRefinement;
  cplx value;                 // lower bound when MaxRefinement (nonnegative g)
  double error_estimate = 0;  // |v_k - v_{k-1}| of the last two rounds
  std::vector<TracePoint> trace;
  double growth_rate = 0;     // d value / d depth, set when Diverged
  int final_round = 0;

  bool converged() const { return status == QuadStatus::Converged; }
};

struct QuadratureOptions {
  double tol = 1e-6;
  int max_depth = 1024;
};

// Refinement round k grades to dyadic depth 4 * 2^k.
int depth_for_round(int round);
int rounds_for_depth(int max_depth);

// Rules for a single refinement round. Curve rules are composite 8-point
// Gauss-Legendre per segment with dyadic grading toward the projections of
// atoms within distance 1; domain rules are polar about each singular atom.
std::vector<QuadNode> curve_nodes(const Curve& c, const AtomicLogWeight& w, int round, int region = 0);
std::vector<QuadNode> domain_nodes(const Domain& d, const AtomicLogWeight& w, int round, int region = 0);
std::vector<QuadNode> region_nodes(const Region& r, const AtomicLogWeight& w, int round, int region = 0);

// Convergence/divergence verdict on a refinement trace (depth, value).
//
// Converged once two successive rounds agree to tol * max(1, |v|).
// Diverged needs >= 6 rounds: over the last 4, the least-squares slope of
// |v| against depth must raise the value by more than 5% of max(1, |v|)
// across the window, with non-shrinking positive increments.
// Returns nullopt while undecided and more rounds remain.
std::optional<QuadratureOutcome> classify_trace(const std::vector<TracePoint>& trace, double tol, bool finished);

QuadratureOutcome integrate_curve(const Curve& c, const IntegrandSpec& g, const AtomicLogWeight& w,
                                  const QuadratureOptions& opt = {});
QuadratureOutcome integrate_domain(const Domain& d, const IntegrandSpec& g, const AtomicLogWeight& w,
                                   const QuadratureOptions& opt = {});
QuadratureOutcome integrate_region(const Region& r, const IntegrandSpec& g, const AtomicLogWeight& w,
                                   const QuadratureOptions& opt = {});

// Sum over regions of the integral of f conj(g) e^{-phi}; throws
// DivergentNorm naming the first region where |f|^2 or |g|^2 does not converge.
cplx weighted_inner(std::span<const Region> regions, const IntegrandSpec& f, const IntegrandSpec& g,
                    const AtomicLogWeight& w, const QuadratureOptions& opt = {});

struct SingularityBoundCheck {
  double value = 0;
  double bound = 0;
  bool ok = false;
  QuadStatus status = QuadStatus::Converged;
};

// Integral of |z - z0|^-beta ds over the graph against 2(L+1)(b-a)^(1-beta)/(1-beta).
SingularityBoundCheck verify_singularity_bound(const LipschitzGraph& g, PlanarPoint z0, double beta, const QuadratureOptions& opt = {});

}  // namespace ml2
