#include <benchmark/benchmark.h>

#include "mcause/factor_model.hpp"
#include "mcause/scm.hpp"

namespace {

void BM_EmFit(benchmark::State& state) {
  mcause::RandomScmOptions o;
  o.z_card = 2;
  o.n_causes = 5;
  auto scm = mcause::random_scm(o, 3);
  auto data = mcause::sample(scm, static_cast<std::size_t>(state.range(0)), 4)
                  .observed.select(scm.cause_names());
  for (auto _ : state) {
    auto fit = mcause::em_fit(data, {.n_classes = 2, .restarts = 3, .seed = 5});
    benchmark::DoNotOptimize(fit.report.final_loglik);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
