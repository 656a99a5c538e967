#include "ghsel/ghlik.hpp"
#include "ghsel/marglik.hpp"
#include "ghsel/optimize.hpp"
#include "ghsel/sampler.hpp"
#include "ghsel/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace ghsel;

namespace {

Dataset make_data(int n, int p) {
  SimConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.truth = standard_truth(HazardClass::GH, p);
  cfg.seed = 7;
  auto d = simulate_dataset(cfg).data;
  d.standardize();
  return d;
}

const Gamma& gh_model() {
  static const Gamma g = Gamma::parse("3131000000");
  return g;
}

void BM_LoglikValue(benchmark::State& st) {
  const auto d = make_data(static_cast<int>(st.range(0)), 10);
  GhLikelihood L(gh_model(), d, Kernel::Normal);
  const auto psi = default_init(gh_model(), d);
  for (auto _ : st) benchmark::DoNotOptimize(L.evaluate(psi, 0).value);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_LoglikValue)->Arg(250)->Arg(1000)->Arg(4000);

void BM_LoglikHessian(benchmark::State& st) {
  const auto d = make_data(static_cast<int>(st.range(0)), 10);
  GhLikelihood L(gh_model(), d, Kernel::Normal);
  const auto psi = default_init(gh_model(), d);
  for (auto _ : st) benchmark::DoNotOptimize(L.evaluate(psi, 2).hess.data());
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_LoglikHessian)->Arg(250)->Arg(1000)->Arg(4000);

void BM_FitMle(benchmark::State& st) {
  const auto d = make_data(static_cast<int>(st.range(0)), 10);
  for (auto _ : st) benchmark::DoNotOptimize(fit_mle(gh_model(), d, Kernel::Normal).objective);
}
BENCHMARK(BM_FitMle)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Marglik(benchmark::State& st) {
  const auto d = make_data(1000, 10);
  const MarglikMethod m = st.range(0) == 0 ? MarglikMethod::ILA : st.range(0) == 1 ? MarglikMethod::ILA_RobustG : MarglikMethod::LA;
  MarglikConfig cfg;
  cfg.method = m;
  if (m == MarglikMethod::LA) cfg.coef.kind = PriorKind::Product;
  if (m == MarglikMethod::ILA_RobustG) cfg.coef.g_mode = GMode::RobustHyper;
  MarglikEngine engine(d, cfg);
  const auto start = common_init(gh_model(), 0.0, 0.0);
  for (auto _ : st) {
    st.PauseTiming();
    engine.cache().clear();
    st.ResumeTiming();
    benchmark::DoNotOptimize(engine.log_ml(gh_model()));
  }
  st.SetLabel(std::string(to_string(m)));
}
BENCHMARK(BM_Marglik)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Proposal(benchmark::State& st) {
  Rng rng = make_rng(3);
  Gamma g = gh_model();
  for (auto _ : st) {
    auto prop = propose(g, rng);
    benchmark::DoNotOptimize(prop.log_q_rev);
    g = prop.gamma;
  }
}
BENCHMARK(BM_Proposal);

}  // namespace

BENCHMARK_MAIN();
