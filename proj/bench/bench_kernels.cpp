// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "soslab/experiments.hpp"

using namespace soslab;

namespace {

PartitionOptions partition_opts(int len) {
  PartitionOptions o;
  o.max_len = len;
  return o;
}

void BM_PartitionSerial(benchmark::State& st) {
  const auto phi = zero_decoration();
  const auto o = partition_opts(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(partition_function_serial({6, 0}, phi, 2.0, o).log_g);
}

void BM_PartitionParallel(benchmark::State& st) {
  const auto phi = zero_decoration();
  const auto o = partition_opts(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(partition_function({6, 0}, phi, 2.0, o).log_g);
}

// Thread count as the second argument; 0 means the OpenMP default.
void BM_Irreducible(benchmark::State& st) {
  const int saved = omp_get_max_threads();
  if (st.range(1) > 0) omp_set_num_threads(static_cast<int>(st.range(1)));
  const auto phi = zero_decoration();
  for (auto _ : st) benchmark::DoNotOptimize(enumerate_irreducible(2.0, phi, static_cast<int>(st.range(0))).count());
  omp_set_num_threads(saved);
}

void BM_MinRhoChains(benchmark::State& st) {
  const int saved = omp_get_max_threads();
  if (st.range(0) > 0) omp_set_num_threads(static_cast<int>(st.range(0)));
  MinRhoConfig c;
  c.sizes = {32};
  c.samples = 8;
  c.chains = 4;
  c.burn_in = 200;
  c.thin = 20;
  for (auto _ : st) benchmark::DoNotOptimize(exp_min_rho(c).samples.size());
  omp_set_num_threads(saved);
}

}  // namespace

BENCHMARK(BM_PartitionSerial)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PartitionParallel)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Irreducible)->Args({12, 1})->Args({12, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MinRhoChains)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
