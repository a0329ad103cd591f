// Cost of one charge evaluation: exact spectral path against one sampled
// Lanczos probe, on honeycomb flakes of growing size.

#include <benchmark/benchmark.h>

#include "sscf/dftb.hpp"
#include "sscf/estimator.hpp"
#include "sscf/krylov.hpp"
#include "sscf/synthetic.hpp"

namespace {

using namespace sscf;

dftb::ChargeModel flake(Index atoms) {
  dftb::SyntheticSpec spec;
  spec.atoms = atoms;
  spec.seed = 1;
  return dftb::ChargeModel(dftb::generate_synthetic(spec));
}

void BM_ChargeExact(benchmark::State& state) {
  const auto model = flake(state.range(0));
  const Vector q = model.system().q0;
  for (auto _ : state) benchmark::DoNotOptimize(model.charge_exact(q));
  state.SetComplexityN(state.range(0));
}

void BM_ChargeSample(benchmark::State& state) {
  const auto model = flake(state.range(0));
  const Vector q = model.system().q0;
  const Index ell = state.range(1);
  const Vector v = estimator::draw_probe({estimator::ProbeKind::Rademacher, model.orbitals()}, {1, 0, 0});
  for (auto _ : state) benchmark::DoNotOptimize(model.charge_sample(q, ell, v));
  state.SetComplexityN(state.range(0));
}

void BM_BuildA(benchmark::State& state) {
  const auto model = flake(state.range(0));
  const Vector q = model.system().q0;
  for (auto _ : state) benchmark::DoNotOptimize(model.build_a(q));
}

void BM_Lanczos(benchmark::State& state) {
  const auto model = flake(state.range(0));
  const auto a = model.build_a(model.system().q0);
  const Vector v = estimator::draw_probe({estimator::ProbeKind::Rademacher, model.orbitals()}, {2, 0, 0});
  const auto f = model.occupation();
  for (auto _ : state) benchmark::DoNotOptimize(krylov::krylov_apply_f(a, v, state.range(1), f));
}

void BM_DrawProbe(benchmark::State& state) {
  const estimator::ProbeDistribution dist{estimator::ProbeKind::Rademacher, state.range(0)};
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(estimator::draw_probe(dist, {1, i++, 0}));
}

}  // namespace

BENCHMARK(BM_ChargeExact)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_ChargeSample)->ArgsProduct({{16, 32, 64, 128, 256}, {8}})->Complexity();
BENCHMARK(BM_BuildA)->RangeMultiplier(2)->Range(16, 256);
BENCHMARK(BM_Lanczos)->ArgsProduct({{128}, {4, 8, 16, 32}});
BENCHMARK(BM_DrawProbe)->Arg(32)->Arg(256);
BENCHMARK_MAIN();
