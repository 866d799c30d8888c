#include <vector>

#include <benchmark/benchmark.h>

#include "noct/kernels.hpp"
#include "noct/models.hpp"
#include "noct/observability.hpp"
#include "noct/sim/runner.hpp"

using namespace noct;
using kernels::Execution;

namespace {

const Codistribution& const_accel() {
  static const Codistribution cod = [] {
    auto sys = models::vio_system();
    sys.constraints = models::vio_constraints(models::VioConstraint::kConstLocalAccel);
    return build_codistribution(apply_constraints(sys));
  }();
  return cod;
}

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::kParallel : Execution::kSerial; }

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "openmp" : "serial"); }

void BM_RowBases(benchmark::State& st) {
  const auto& cod = const_accel();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::row_bases(cod.values, mode(st)));
  label(st);
}

void BM_NullSpaces(benchmark::State& st) {
  const auto& cod = const_accel();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::null_spaces(cod.values, mode(st)));
  label(st);
}

void BM_ColumnDeletedRanks(benchmark::State& st) {
  const auto& cod = const_accel();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::column_deleted_ranks(cod.values, mode(st)));
  label(st);
}

void BM_MultiPointEvaluate(benchmark::State& st) {
  const auto& cod = const_accel();
  std::vector<Expr> exprs;
  for (const auto& r : cod.rows) exprs.push_back(r.lie);
  for (auto _ : st) {
    kernels::MultiPointEvaluator ev(cod.points, mode(st));
    std::vector<bool> poles;
    benchmark::DoNotOptimize(ev.evaluate(exprs, poles));
  }
  label(st);
}

void BM_AnalyzeVio(benchmark::State& st) {
  const auto sys = models::vio_system();
  AnalysisOptions opts;
  opts.execution = mode(st);
  for (auto _ : st) benchmark::DoNotOptimize(analyze(sys, opts));
  label(st);
}

void BM_RunBatch(benchmark::State& st) {
  auto sc = sim::named_scenario("case_c");
  sc.duration = 10;
  for (auto _ : st) benchmark::DoNotOptimize(sim::run_batch(sc, 2, 0, mode(st)));
  label(st);
}

}  // namespace

BENCHMARK(BM_RowBases)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NullSpaces)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColumnDeletedRanks)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MultiPointEvaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeVio)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
