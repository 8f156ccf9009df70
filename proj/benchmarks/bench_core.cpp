#include "speclab/decompose.hpp"
#include "speclab/potentials.hpp"
#include "speclab/spectra.hpp"

#include <benchmark/benchmark.h>

using namespace speclab;

namespace {

Field well_field(const DomainSpec& dom, double depth) {
  Field v = make_field(dom);
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(node_abs(dom, i) - 8.0) < 3.0) v.values[i] = depth;
  return v;
}

}  // namespace

static void BM_build_operator_1d(benchmark::State& state) {
  auto dom = DomainSpec::interval(-20, 20, static_cast<int>(state.range(0)));
  Field v = make_field(dom);
  for (auto _ : state) benchmark::DoNotOptimize(build_operator(dom, v, -1.0));
}
BENCHMARK(BM_build_operator_1d)->Arg(4000)->Arg(40000);

static void BM_sturm_count(benchmark::State& state) {
  auto dom = DomainSpec::interval(-20, 20, static_cast<int>(state.range(0)));
  auto op = build_operator(dom, well_field(dom, 1.0), -1.0);
  Eigen::VectorXd diag, off;
  tridiagonal_bands(op.matrix, diag, off);
  for (auto _ : state) benchmark::DoNotOptimize(sturm_count(diag, off, -0.1));
}
BENCHMARK(BM_sturm_count)->Arg(4000)->Arg(40000);

static void BM_count_below_2d_inertia(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto dom = DomainSpec::rectangle(-10, 10, -10, 10, n);
  Field v = make_field(dom);
  for (int p = 0; p < v.size(); ++p)
    if (node_abs(dom, p) < 2.0) v.values[p] = 2.0;
  auto op = build_operator(dom, v, -1.0);
  for (auto _ : state) benchmark::DoNotOptimize(count_below(op, 0.0).count);
}
BENCHMARK(BM_count_below_2d_inertia)->Arg(60)->Arg(120);

static void BM_eigs_below_tridiagonal(benchmark::State& state) {
  auto dom = DomainSpec::interval(-20, 20, static_cast<int>(state.range(0)));
  auto op = build_operator(dom, well_field(dom, 2.0), -1.0);
  for (auto _ : state) benchmark::DoNotOptimize(eigs_below(op, 0.0).count());
}
BENCHMARK(BM_eigs_below_tridiagonal)->Arg(8000)->Arg(32000);

static void BM_ground_state_2d_shift_invert(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto dom = DomainSpec::rectangle(-10, 10, -10, 10, n);
  Field v = make_field(dom);
  for (int p = 0; p < v.size(); ++p)
    if (node_abs(dom, p) < 2.0) v.values[p] = 2.0;
  auto op = build_operator(dom, v, -1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ground_state(op).lambda);
}
BENCHMARK(BM_ground_state_2d_shift_invert)->Arg(64)->Arg(100);

static void BM_greedy_cover_radial(benchmark::State& state) {
  auto dom = DomainSpec::radial(0.25, 95, 3, static_cast<int>(state.range(0)));
  Field v = make_field(dom);
  for (int i = 0; i < v.size(); ++i) {
    const double r = node_abs(dom, i);
    if (r > 6 && r < 9) v.values[i] = -1.2;
    if (r > 60 && r < 65) v.values[i] = 0.9;
  }
  auto Hp = build_operator(dom, v, +1.0, radial_centrifugal_coefficient(3));
  auto Hm = build_operator(dom, v, -1.0, radial_centrifugal_coefficient(3));
  for (auto _ : state) {
    auto cov = greedy_cover(Hp, Hm, 1e-6);
    benchmark::DoNotOptimize(cov.layers.size());
  }
}
BENCHMARK(BM_greedy_cover_radial)->Arg(2000)->Arg(4000);

BENCHMARK_MAIN();
