#include <benchmark/benchmark.h>

#include <nested_lsmc/basis.hpp>
#include <nested_lsmc/estimators.hpp>
#include <nested_lsmc/model.hpp>
#include <nested_lsmc/regress.hpp>
#include <nested_lsmc/rng.hpp>

namespace {

void BM_PhiloxUniform(benchmark::State& state) {
  nlsmc::UniformStream s(1, {7});
  double acc = 0.0;
  for (auto _ : state) acc += s.uniform();
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxUniform);

void BM_PhiloxNormal(benchmark::State& state) {
  nlsmc::UniformStream s(1, {7});
  double acc = 0.0;
  for (auto _ : state) acc += s.normal();
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxNormal);

void BM_StreamDerivation(benchmark::State& state) {
  std::uint64_t i = 0;
  double acc = 0.0;
  for (auto _ : state) {
    nlsmc::UniformStream s(1, {2, 3, i++, 0});
    acc += s.uniform();
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_StreamDerivation);

void BM_DrawNestedToy(benchmark::State& state) {
  const auto model = nlsmc::gaussian_toy(0.1);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = nlsmc::draw_nested(model, 5000, k, {1, {2}});
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * 5000 * (k + 1));
}
BENCHMARK(BM_DrawNestedToy)->Arg(1)->Arg(10)->Arg(64);

void BM_DrawNestedSde(benchmark::State& state) {
  const auto model = nlsmc::cosine_sde(9.0, 10.0, 200);
  for (auto _ : state) {
    auto s = nlsmc::draw_nested(model, 1000, 20, {1, {2}});
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_DrawNestedSde)->Unit(benchmark::kMillisecond);

void BM_FitPiecewise(benchmark::State& state) {
  const auto model = nlsmc::cosine_sde(9.0, 10.0, 200);
  const auto samples = nlsmc::draw_nested(model, 5000, 1, {1, {3}});
  const auto family = nlsmc::make_family({nlsmc::BasisKind::piecewise, 3, static_cast<int>(state.range(0))},
                                         samples.first_coordinates());
  const nlsmc::FitConfig cfg{nlsmc::FitMethod::regularized};
  for (auto _ : state) {
    auto r = nlsmc::fit(samples, *family, cfg);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_FitPiecewise)->Arg(50)->Arg(100);

void BM_AntitheticToy(benchmark::State& state) {
  const auto model = nlsmc::gaussian_toy(0.1);
  const auto samples = nlsmc::draw_nested(model, 50000, 8, {1, {4}});
  const nlsmc::ConstantFamily family;
  const auto fr = nlsmc::fit_linear(samples, family);
  for (auto _ : state) {
    auto ve = nlsmc::ab_antithetic(samples, family, fr.theta);
    benchmark::DoNotOptimize(ve);
  }
}
BENCHMARK(BM_AntitheticToy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
