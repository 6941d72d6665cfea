// Serial reference kernels against their OpenMP counterparts.

#include "spp/regularity.hpp"
#include "spp/solver.hpp"

#include <benchmark/benchmark.h>

namespace {

const spp::StochasticProblem& regression() {
  static const auto problem = spp::generate(spp::InstanceSpec{});
  return problem;
}

const spp::StochasticProblem& feasibility() {
  static const auto problem = spp::generate_halfspace_cfp(20, 60, 1);
  return problem;
}

spp::RunOptions options() {
  spp::RunOptions o;
  o.metrics.record_timing = false;
  o.metrics.stride = 50;
  return o;
}

void BM_ReplicateSerial(benchmark::State& state) {
  const auto& p = regression();
  const spp::Vector x0 = spp::Vector::Zero(p.dimension());
  for (auto _ : state) {
    auto mean = spp::replicate_serial(p, x0, spp::StepSchedule::polynomial(1.0, 1.0), 2000,
                                      static_cast<std::size_t>(state.range(0)), 0, options());
    benchmark::DoNotOptimize(mean);
  }
}

void BM_ReplicateParallel(benchmark::State& state) {
  const auto& p = regression();
  const spp::Vector x0 = spp::Vector::Zero(p.dimension());
  for (auto _ : state) {
    auto mean = spp::replicate_parallel(p, x0, spp::StepSchedule::polynomial(1.0, 1.0), 2000,
                                        static_cast<std::size_t>(state.range(0)), 0, options(), 0);
    benchmark::DoNotOptimize(mean);
  }
}

void BM_EstimatorSerial(benchmark::State& state) {
  spp::LinearRegularityOptions o;
  o.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spp::estimate_linear_regularity_serial(feasibility(), o));
}

void BM_EstimatorParallel(benchmark::State& state) {
  spp::LinearRegularityOptions o;
  o.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spp::estimate_linear_regularity_parallel(feasibility(), o, 0));
}

}  // namespace

BENCHMARK(BM_ReplicateSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicateParallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimatorSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimatorParallel)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
