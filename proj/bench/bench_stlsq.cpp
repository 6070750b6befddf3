// Serial reference vs OpenMP kernels for candidate-library evaluation and STLSQ.
// Arg 0 selects the PMU reporting rate (frames per second).
#include <benchmark/benchmark.h>

#include <map>

#include "pcsindy/config.hpp"

using namespace pcsindy;

namespace {

struct Problem {
  CandidateLibrary lib;
  MeasurementFrame frame;
  SnapshotMatrices snap;
  StlsqConfig cfg;
};

const Problem& problem(int rate) {
  static std::map<int, Problem> cache;
  auto it = cache.find(rate);
  if (it != cache.end()) return it->second;
  auto rc = parse_config(nlohmann::ordered_json::object());
  rc.pmu.reporting_rate = rate;
  const auto tr = simulate(rc.identification, rc.microgrid);
  const auto frame = estimate_derivatives(sample(tr, rc.pmu), rc.derivatives);
  CandidateLibrary lib(rc.library_spec(LibraryKind::Intuitive));
  auto snap = build_matrices(frame, lib);
  auto cfg = rc.stlsq;
  cfg.block_structured = false;  // every target against all 82 columns
  return cache.emplace(rate, Problem{std::move(lib), frame, std::move(snap), cfg}).first->second;
}

void BM_LibrarySerial(benchmark::State& st) {
  const auto& p = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(p.lib.evaluate_serial(p.frame));
  st.counters["rows"] = static_cast<double>(p.frame.size());
}

void BM_LibraryParallel(benchmark::State& st) {
  const auto& p = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(p.lib.evaluate(p.frame));
  st.counters["rows"] = static_cast<double>(p.frame.size());
}

void BM_StlsqSerial(benchmark::State& st) {
  const auto& p = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(stlsq_serial(p.snap, p.cfg));
}

void BM_StlsqParallel(benchmark::State& st) {
  const auto& p = problem(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(stlsq(p.snap, p.cfg));
}

}  // namespace

BENCHMARK(BM_LibrarySerial)->Arg(120)->Arg(1200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LibraryParallel)->Arg(120)->Arg(1200)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_StlsqSerial)->Arg(120)->Arg(1200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StlsqParallel)->Arg(120)->Arg(1200)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
