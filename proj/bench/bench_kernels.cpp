#include <benchmark/benchmark.h>

#include <vector>

#include "ml2/approx.hpp"
#include "ml2/kernels.hpp"
#include "ml2/quadrature.hpp"

namespace {

using ml2::kernels::Exec;

const ml2::LipschitzGraph& sawtooth() {
  static const ml2::LipschitzGraph g = ml2::graph_from_knots({0, 0.25, 0.5, 0.75, 1}, {0, 0.5, 0, 0.5, 0});
  return g;
}

const ml2::AtomicLogWeight& weight() {
  static const ml2::AtomicLogWeight w = ml2::AtomicLogWeight::single({0.5, 0.0}, 0.5);
  return w;
}

std::vector<ml2::QuadNode> nodes(int round) { return ml2::curve_nodes(sawtooth(), weight(), round); }

void evaluate(benchmark::State& state, Exec exec) {
  const auto ns = nodes(static_cast<int>(state.range(0)));
  const auto g = ml2::IntegrandSpec::abs2_polynomial({1.0, 0.5, 0.25});
  std::vector<ml2::cplx> out(ns.size());
  for (auto _ : state) {
    ml2::kernels::evaluate(ns, weight(), g, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<long long>(state.iterations()) * static_cast<long long>(ns.size()));
}

void BM_EvaluateSerial(benchmark::State& s) { evaluate(s, Exec::Serial); }
void BM_EvaluateParallel(benchmark::State& s) { evaluate(s, Exec::Parallel); }
BENCHMARK(BM_EvaluateSerial)->DenseRange(2, 6, 2);
BENCHMARK(BM_EvaluateParallel)->DenseRange(2, 6, 2);

void reduce(benchmark::State& state, int mode) {
  std::vector<ml2::cplx> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {1.0 / (1.0 + static_cast<double>(i)), 0.0};
  for (auto _ : state) {
    ml2::cplx s = mode == 0   ? ml2::kernels::naive_sum(v)
                  : mode == 1 ? ml2::kernels::pairwise_sum(v, Exec::Serial)
                              : ml2::kernels::pairwise_sum(v, Exec::Parallel);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(static_cast<long long>(state.iterations()) * state.range(0));
}

void BM_SumNaive(benchmark::State& s) { reduce(s, 0); }
void BM_SumPairwiseSerial(benchmark::State& s) { reduce(s, 1); }
void BM_SumPairwiseParallel(benchmark::State& s) { reduce(s, 2); }
BENCHMARK(BM_SumNaive)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_SumPairwiseSerial)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_SumPairwiseParallel)->Range(1 << 12, 1 << 20);

void BM_IntegrateCurve(benchmark::State& state) {
  for (auto _ : state) {
    auto o = ml2::integrate_curve(sawtooth(), ml2::IntegrandSpec::one(), weight());
    benchmark::DoNotOptimize(o.value);
  }
}
BENCHMARK(BM_IntegrateCurve)->Unit(benchmark::kMillisecond);

void BM_DiskArea(benchmark::State& state) {
  const auto d = ml2::Domain::disk({0, 0}, 1.0);
  const auto w = ml2::AtomicLogWeight::single({0, 0}, 1.0);
  for (auto _ : state) {
    auto o = ml2::integrate_domain(d, ml2::IntegrandSpec::one(), w);
    benchmark::DoNotOptimize(o.value);
  }
}
BENCHMARK(BM_DiskArea)->Unit(benchmark::kMillisecond);

void BM_BestPoly(benchmark::State& state) {
  const std::vector<ml2::Region> rs{sawtooth()};
  const ml2::AtomicLogWeight none;
  for (auto _ : state) {
    auto p = ml2::best_poly(ml2::TargetFunction::exp(), rs, none, static_cast<int>(state.range(0)), 1.0);
    benchmark::DoNotOptimize(p.residual_norm);
  }
}
BENCHMARK(BM_BestPoly)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
