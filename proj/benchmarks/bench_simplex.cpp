#include <benchmark/benchmark.h>

#include <limits>
#include <vector>

#include "mcause/random.hpp"
#include "mcause/sensitivity.hpp"

namespace {

std::vector<double> simplex_point(mcause::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = rng.uniform() + 0.05);
  for (auto& x : v) x /= s;
  return v;
}

// Budgeted bound LP with |Y| = |Z| = range(0).
void BM_CalibratedBounds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mcause::Rng rng(17);
  auto my = simplex_point(rng, n);
  auto mz = simplex_point(rng, n);
  auto prior = simplex_point(rng, n);
  mcause::LinearEstimand est{"mean", {}};
  for (std::size_t y = 0; y < n; ++y) est.weights.push_back(static_cast<double>(y));
  for (auto _ : state) {
    auto reg = mcause::calibrated_bounds(my, mz, prior, est, 0.5);
    benchmark::DoNotOptimize(reg.lower);
  }
}
BENCHMARK(BM_CalibratedBounds)->Arg(2)->Arg(4)->Arg(8);

void BM_CopulaBounds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mcause::Rng rng(18);
  auto my = simplex_point(rng, n);
  auto mz = simplex_point(rng, n);
  auto prior = simplex_point(rng, n);
  mcause::LinearEstimand est{"mean", {}};
  for (std::size_t y = 0; y < n; ++y) est.weights.push_back(static_cast<double>(y));
  for (auto _ : state) {
    auto reg = mcause::copula_bounds(my, mz, prior, est);
    benchmark::DoNotOptimize(reg.upper);
  }
}
BENCHMARK(BM_CopulaBounds)->Arg(2)->Arg(4)->Arg(8);

}  // namespace
