#pragma once

#include <span>
#include <vector>

#include "ml2/nodes.hpp"
#include "ml2/weights.hpp"

// Data-parallel node kernels. Every kernel has an OpenMP path and a serial
// reference path; both evaluate nodes independently and reduce through the
// same fixed pairwise tree, so their results are bit-identical.
namespace ml2::kernels {

enum class Exec { Serial, Parallel };

// log_w - phi at the node, using near_delta for the graded atom.
double log_density(const AtomicLogWeight& w, const QuadNode& n);

// e^{log_w - phi} per node.
std::vector<double> node_weights(std::span<const QuadNode> nodes, const AtomicLogWeight& w,
                                 Exec exec = Exec::Parallel);

// g e^{log_w - phi} per node. Returns false if g produced a non-finite value.
bool evaluate(std::span<const QuadNode> nodes, const AtomicLogWeight& w, const IntegrandSpec& g,
              std::span<cplx> out, Exec exec = Exec::Parallel);

cplx pairwise_sum(std::span<const cplx> v, Exec exec = Exec::Parallel);
double pairwise_sum(std::span<const double> v, Exec exec = Exec::Parallel);

// Sum in index order, kept only as a baseline for benchmarks.
cplx naive_sum(std::span<const cplx> v);

}  // namespace ml2::kernels
