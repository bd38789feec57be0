#include "ml2/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace ml2 {

IntegrandSpec IntegrandSpec::one() {
  return {[](const QuadNode&) { return cplx{1.0}; }, "one", true};
}

cplx horner(std::span<const cplx> coeffs, cplx u) {
  cplx acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
  return acc;
}

IntegrandSpec IntegrandSpec::polynomial(std::vector<cplx> coeffs) {
  return {[c = std::move(coeffs)](const QuadNode& n) { return horner(c, n.z); }, "polynomial", false};
}

IntegrandSpec IntegrandSpec::abs2_polynomial(std::vector<cplx> coeffs) {
  return {[c = std::move(coeffs)](const QuadNode& n) { return cplx{std::norm(horner(c, n.z))}; },
          "abs2_polynomial", true};
}

IntegrandSpec IntegrandSpec::tabulated(std::vector<double> params, std::vector<double> values) {
  auto fn = [p = std::move(params), v = std::move(values)](const QuadNode& n) -> cplx {
    if (n.t <= p.front()) return v.front();
    if (n.t >= p.back()) return v.back();
    const auto it = std::upper_bound(p.begin(), p.end(), n.t);
    const std::size_t i = static_cast<std::size_t>(it - p.begin()) - 1;
    const double u = (n.t - p[i]) / (p[i + 1] - p[i]);
    return v[i] + u * (v[i + 1] - v[i]);
  };
  return {std::move(fn), "tabulated", false};
}

IntegrandSpec IntegrandSpec::custom(std::string name, std::function<cplx(const QuadNode&)> fn, bool nonnegative) {
  return {std::move(fn), std::move(name), nonnegative};
}

namespace kernels {

namespace {

constexpr std::size_t kLeaf = 16;
constexpr std::size_t kTaskCutoff = 1 << 13;

template <class T>
T serial_tree(const T* a, std::size_t n) {
  if (n <= kLeaf) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t h = n / 2;
  return serial_tree(a, h) + serial_tree(a + h, n - h);
}

// Same split points and combination order as serial_tree; only the
// scheduling of independent subtrees differs.
template <class T>
T task_tree(const T* a, std::size_t n) {
  if (n <= kTaskCutoff) return serial_tree(a, n);
  const std::size_t h = n / 2;
  T left{}, right{};
#pragma omp task shared(left) firstprivate(a, h)
  left = task_tree(a, h);
  right = task_tree(a + h, n - h);
#pragma omp taskwait
  return left + right;
}

template <class T>
T tree_sum(std::span<const T> v, Exec exec) {
  if (v.empty()) return T{};
  if (exec == Exec::Serial || v.size() <= kTaskCutoff || omp_get_max_threads() == 1)
    return serial_tree(v.data(), v.size());
  T out{};
#pragma omp parallel
#pragma omp single
  out = task_tree(v.data(), v.size());
  return out;
}

}  // namespace

double log_density(const AtomicLogWeight& w, const QuadNode& n) {
  double phi = w.smooth_at(n.z);
  const auto& atoms = w.atoms();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const cplx d = static_cast<int>(i) == n.near_atom ? n.near_delta : n.z - atoms[i].where.z();
    phi += atoms[i].beta * std::log(std::abs(d));
  }
  return n.log_w - phi;
}

std::vector<double> node_weights(std::span<const QuadNode> nodes, const AtomicLogWeight& w, Exec exec) {
  std::vector<double> out(nodes.size());
  const auto n = static_cast<std::ptrdiff_t>(nodes.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = std::exp(log_density(w, nodes[i]));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = std::exp(log_density(w, nodes[i]));
  }
  return out;
}

bool evaluate(std::span<const QuadNode> nodes, const AtomicLogWeight& w, const IntegrandSpec& g,
              std::span<cplx> out, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(nodes.size());
  int bad = 0;
  auto one = [&](std::ptrdiff_t i) -> bool {
    const cplx gv = g(nodes[i]);
    if (!std::isfinite(gv.real()) || !std::isfinite(gv.imag())) {
      out[i] = 0.0;
      return false;
    }
    out[i] = gv == 0.0 ? cplx{0.0} : gv * std::exp(log_density(w, nodes[i]));
    return true;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(+ : bad)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      if (!one(i)) ++bad;
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      if (!one(i)) ++bad;
  }
  return bad == 0;
}

cplx pairwise_sum(std::span<const cplx> v, Exec exec) { return tree_sum(v, exec); }
double pairwise_sum(std::span<const double> v, Exec exec) { return tree_sum(v, exec); }

cplx naive_sum(std::span<const cplx> v) {
  cplx s = 0.0;
  for (const auto& x : v) s += x;
  return s;
}

}  // namespace kernels
}  // namespace ml2
