#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ml2/geometry.hpp"

namespace ml2 {

struct Atom {
  PlanarPoint where;
  double beta = 0.0;
};

/// phi(z) = sum_i beta_i log|z - zeta_i| + c0 + c1 Re z + c2 Im z + c3 |z|^2.
///
/// Coincident atoms are merged on construction (masses add), so the stored
/// atoms are pairwise distinct. c3 >= 0 keeps the background subharmonic.
class AtomicLogWeight {
 public:
  AtomicLogWeight() = default;
  AtomicLogWeight(std::vector<Atom> atoms, std::array<double, 4> smooth = {0, 0, 0, 0});

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::array<double, 4>& smooth() const { return smooth_; }
  double smooth_at(cplx z) const {
    return smooth_[0] + smooth_[1] * z.real() + smooth_[2] * z.imag() + smooth_[3] * std::norm(z);
  }
  double total_mass() const;

  static AtomicLogWeight single(PlanarPoint where, double beta);

 private:
  std::vector<Atom> atoms_;
  std::array<double, 4> smooth_{0, 0, 0, 0};
};

double phi_eval(const AtomicLogWeight& w, PlanarPoint z);

double lelong_atomic(const AtomicLogWeight& w, PlanarPoint z);

struct KiselmanReport {
  double estimate = 0.0;       // ratio at the smallest radius
  std::vector<double> radii;
  std::vector<double> ratios;  // max_{|zeta - z| = r} phi / log r
};

KiselmanReport lelong_kiselman(const AtomicLogWeight& w, PlanarPoint z, std::span<const double> radii,
                               int samples_per_circle);

struct QZero {
  PlanarPoint where;
  int multiplicity = 1;
};

/// phi = psi + sum_j m_j log|z - p_j|, with psi the residual weight.
struct QFactorization {
  std::vector<QZero> zeros;
  AtomicLogWeight residual;

  bool trivial() const { return zeros.empty(); }
  int degree() const;
  cplx q_at(cplx z) const;
};

// Threshold of integrability for a region: 1 on curves, 2 on domains.
struct RegionThreshold {
  const Region* region = nullptr;
  double rho = 1.0;
};

bool atom_on_region(PlanarPoint atom, const Region& region);

QFactorization decompose_Q(const AtomicLogWeight& w, const Region& region, double rho);
// Multi-region variant: an atom lying on several regions uses the smallest rho.
QFactorization decompose_Q(const AtomicLogWeight& w, std::span<const RegionThreshold> regions);

/// Continuous branch of sqrt(Q) along a curve.
///
/// The argument of every factor (z - p_j) is continued along the curve
/// vertex by vertex; passing straight through a zero turns its argument by
/// +pi. The branch is normalised so that the first evaluation point used by
/// sqrtQ_along takes the principal square root.
class SqrtQBranch {
 public:
  SqrtQBranch(const Curve& curve, const QFactorization& qf);

  // Value on segment `seg` at point z of that segment, with the branch fixed
  // at the curve start. `shift` adds a multiple of 2 pi to the total argument.
  cplx eval(std::size_t seg, cplx z, double shift = 0.0) const;
  double total_arg(std::size_t seg, cplx z) const;
  std::size_t segment_count() const { return dirs_.size(); }

 private:
  std::vector<cplx> verts_;
  std::vector<cplx> dirs_;  // unit direction per segment
  std::vector<QZero> zeros_;
  // start_arg_[j][i]: argument of (z - p_j) when leaving vertex i along segment i.
  std::vector<std::vector<double>> start_arg_;
};

// Samples are curve parameters (abscissa for graphs, arc position for polylines).
std::vector<cplx> sqrtQ_along(const Curve& curve, const QFactorization& qf, std::span<const double> params,
                              bool require_nonzero = false);

AtomicLogWeight counterexample_weight(const CounterexampleArc& arc);

}  // namespace ml2
