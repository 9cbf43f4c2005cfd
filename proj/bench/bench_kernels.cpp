// Parallel kernels against their serial twins, plus two pipeline-level stages.

#include <benchmark/benchmark.h>

#include <random>

#include "stratprof/abelian_transform.hpp"
#include "stratprof/kernels.hpp"
#include "stratprof/reference.hpp"
#include "stratprof/sampling.hpp"

using namespace stratprof;
using C = std::complex<double>;

namespace {

std::vector<C> random_data(std::size_t n) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  std::vector<C> v(n);
  for (auto& z : v) z = {d(rng), d(rng)};
  return v;
}

std::vector<double> random_weights(std::size_t n) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& w : v) w = u(rng);
  return v;
}

template <bool Par>
void BM_apply_multiplier(benchmark::State& st) {
  auto data = random_data(st.range(0));
  const auto m = random_weights(st.range(0));
  for (auto _ : st) {
    if constexpr (Par)
      kernels::apply_multiplier(data, m);
    else
      reference::apply_multiplier(data, m);
    benchmark::DoNotOptimize(data.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Par>
void BM_sum_abs_pow(benchmark::State& st) {
  const auto data = random_data(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(Par ? kernels::sum_abs_pow(data, 4.0) : reference::sum_abs_pow(data, 4.0));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Par>
void BM_spectral_energy(benchmark::State& st) {
  const auto data = random_data(st.range(0));
  const auto w = random_weights(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(Par ? kernels::spectral_energy(data, w) : reference::spectral_energy(data, w));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Par>
void BM_axpy(benchmark::State& st) {
  const auto src = random_data(st.range(0));
  auto dst = random_data(st.range(0));
  for (auto _ : st) {
    if constexpr (Par)
      kernels::axpy({0.5, -0.25}, src, dst);
    else
      reference::axpy({0.5, -0.25}, src, dst);
    benchmark::DoNotOptimize(dst.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <Exec E>
void BM_analyze(benchmark::State& st) {
  const GridSpec g{1, static_cast<std::size_t>(st.range(0)), 16.0};
  const auto [lo, hi] = KernelSet::fitting_range(g);
  const KernelSet ks(build_window(1.0), lo, hi, g);
  const auto gs = SamplingSet::preset(GroupSpec::abelian(1), 0.5);
  const auto f = GridFunction::sample(g, [](std::span<const double> x) {
    return C{std::exp(-x[0] * x[0]) * std::cos(12.0 * x[0]), 0.0};
  });
  for (auto _ : st) benchmark::DoNotOptimize(analyze(f, ks, gs, 2.0, nullptr, E).size());
}

template <Exec E>
void BM_tiling(benchmark::State& st) {
  const auto gs = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  const Box box{{-2, -2, -2}, {2, 2, 2}};
  for (auto _ : st)
    benchmark::DoNotOptimize(verify_tiling(gs, box, static_cast<int>(st.range(0)), E).uncovered_fraction);
}

}  // namespace

BENCHMARK(BM_apply_multiplier<true>)->Name("apply_multiplier/parallel")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_apply_multiplier<false>)->Name("apply_multiplier/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_sum_abs_pow<true>)->Name("sum_abs_pow/parallel")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_sum_abs_pow<false>)->Name("sum_abs_pow/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_spectral_energy<true>)->Name("spectral_energy/parallel")->Arg(1 << 20);
BENCHMARK(BM_spectral_energy<false>)->Name("spectral_energy/serial")->Arg(1 << 20);
BENCHMARK(BM_axpy<true>)->Name("axpy/parallel")->Arg(1 << 20);
BENCHMARK(BM_axpy<false>)->Name("axpy/serial")->Arg(1 << 20);
BENCHMARK(BM_analyze<Exec::Parallel>)->Name("analyze/parallel")->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_analyze<Exec::Serial>)->Name("analyze/serial")->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tiling<Exec::Parallel>)->Name("verify_tiling/parallel")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tiling<Exec::Serial>)->Name("verify_tiling/serial")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
