#include <benchmark/benchmark.h>

#include "hymem/certificates.hpp"
#include "hymem/simulator.hpp"
#include "hymem/system_model.hpp"

using namespace hymem;

namespace {

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

SolutionRecord quad_run(double max_time) {
  QuadcopterParams p;
  SimOptions o;
  o.step = 0.005;
  o.max_time = max_time;
  return simulate(quadcopter_system(p), quadcopter::constant_initial_arc(p, vec3(1, 1, 0.5), Vector::Zero(3), 1, 0.005),
                  InputSignal::constant(vec3(1.5, 0, -0.2)), o);
}

KrasovskiiFunctional functional() {
  KrasovskiiFunctional v;
  v.sigma = {1.0, 1.0};
  v.mu = {1.0, 1.0};
  v.eta = 2.0;
  v.delay = 0.05;
  v.continuous_dim = 6;
  return v;
}

void BM_SimulateQuadcopter(benchmark::State& state) {
  const double t = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(quad_run(t).point_count());
  }
}
BENCHMARK(BM_SimulateQuadcopter)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SimulateDde(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto sys = linear_dde_system(0.0, -1.0, 1.0);
  SimOptions o;
  o.step = h;
  o.max_time = 10.0;
  Vector c(1);
  c << 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(sys, make_constant_arc(c, 1.0, h), InputSignal::zero(1), o).point_count());
  }
}
BENCHMARK(BM_SimulateDde)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Window(benchmark::State& state) {
  const auto rec = quad_run(20.0);
  const HybridTimePoint at{10.0, 50};
  for (auto _ : state) {
    benchmark::DoNotOptimize(window(rec, at, 8.05).branch_count());
  }
}
BENCHMARK(BM_Window);

void BM_EvalFunctional(benchmark::State& state) {
  const auto rec = quad_run(2.0);
  const auto arc = window(rec, {1.0, 5}, 8.05);
  const auto v = functional();
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_functional(v, arc, 1));
  }
}
BENCHMARK(BM_EvalFunctional);

void BM_TraceFunctional(benchmark::State& state) {
  const auto rec = quad_run(20.0);
  const auto v = functional();
  for (auto _ : state) {
    benchmark::DoNotOptimize(trace_functional(v, rec).values.size());
  }
}
BENCHMARK(BM_TraceFunctional)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
