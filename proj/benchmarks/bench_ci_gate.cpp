#include <benchmark/benchmark.h>

#include "mcause/ci_gate.hpp"
#include "mcause/scm.hpp"

namespace {

struct Fixture {
  mcause::Dataset causes;
  std::vector<int> z;
};

Fixture make_fixture(std::size_t n) {
  mcause::RandomScmOptions o;
  o.z_card = 3;
  o.n_causes = 4;
  auto scm = mcause::random_scm(o, 9);
  auto s = mcause::sample(scm, n, 10);
  return {s.observed.select(scm.cause_names()), s.hidden_z};
}

void BM_GStatistic(benchmark::State& state) {
  auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(mcause::stratified_g_statistic(f.causes, f.z, 0, {}));
}
BENCHMARK(BM_GStatistic)->Arg(1000)->Arg(10000);

void BM_PermutationTest(benchmark::State& state) {
  auto f = make_fixture(2000);
  mcause::CiTestOptions opt;
  opt.n_permutations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mcause::mutual_ci_test(f.causes, f.z, 0, opt).p_value);
}
BENCHMARK(BM_PermutationTest)->Arg(99)->Arg(999)->Unit(benchmark::kMillisecond);

}  // namespace
