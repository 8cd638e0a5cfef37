#include <benchmark/benchmark.h>

#include <random>

#include "ibc/ops.hpp"
#include "ibc/quad.hpp"
#include "ibc/solvers.hpp"

using namespace ibc;

namespace {

FockVector random_state(FockSpacePtr sp) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  FockVector v(sp);
  for (int n = 0; n <= sp->n_max(); ++n)
    for (Eigen::Index i = 0; i < v.sector(n).size(); ++i)
      v.sector(n)[i] = {nd(rng), nd(rng)};
  return v;
}

// range(0) is the number of grid points per axis of a d=2 contact model.
void BM_apply_H(benchmark::State &state) {
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, int(state.range(0)), state.range(0) / 2.0}, 1, 2);
  auto H = H_operator(m, sp);
  auto psi = random_state(sp);
  for (auto _ : state)
    benchmark::DoNotOptimize(H(psi));
  state.counters["dim"] = double(sp->dimension());
}
BENCHMARK(BM_apply_H)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_apply_G(benchmark::State &state) {
  const auto m = ModelSpec::nelson();
  auto sp = FockSpace::create({3, int(state.range(0)), 2.0}, 1, 2);
  auto G = G_operator(m, sp);
  auto psi = random_state(sp);
  for (auto _ : state)
    benchmark::DoNotOptimize(G(psi));
  state.counters["dim"] = double(sp->dimension());
}
BENCHMARK(BM_apply_G)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_regularized_I(benchmark::State &state) {
  const auto m = ModelSpec::nelson();
  const double p = double(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(regularized_I(m, p, 1.0 + p * p));
}
BENCHMARK(BM_regularized_I)->Arg(1)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_resolvent_solve(benchmark::State &state) {
  const auto m = ModelSpec::delta2d();
  auto sp = FockSpace::create({2, int(state.range(0)), state.range(0) / 2.0}, 1, 2);
  auto H = H_operator(m, sp);
  auto psi = random_state(sp);
  for (auto _ : state)
    benchmark::DoNotOptimize(resolvent_solve(H, {0.0, 1.0}, psi));
  state.counters["dim"] = double(sp->dimension());
}
BENCHMARK(BM_resolvent_solve)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
