#include <benchmark/benchmark.h>

#include <vector>

#include "cipm/driver.hpp"
#include "cipm/experiments.hpp"
#include "cipm/oracle.hpp"

namespace {

using namespace cipm;

RelaxedProblem rls_problem(Index n_agents, Index rows, Index p,
                           double epsilon) {
  RlsConfig rc;
  rc.n_agents = n_agents;
  rc.rows_per_agent = rows;
  rc.p = p;
  const RlsInstance inst = synth_rls(rc);
  std::vector<LocalSubproblem> sps;
  for (const FamilyInstance& fi : inst.family_agents())
    sps.push_back(fi.make_subproblem());
  return assemble_relaxed_problem(std::move(sps), epsilon);
}

// One Newton direction through the wire protocol. The per-iteration cost
// of the distributed engine is dominated by this path.
void BM_direction_message_passing(benchmark::State& state) {
  const RelaxedProblem prob =
      rls_problem(state.range(0), 20, state.range(1), 1e-3);
  Rng rng(9);
  const Iterate it = random_interior_iterate(prob, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(message_passing_direction(prob, it));
}
BENCHMARK(BM_direction_message_passing)
    ->Args({5, 10})
    ->Args({10, 10})
    ->Args({10, 30})
    ->Args({40, 10});

// The same direction from one factorization of the full system; the
// baseline the message-passing path is checked against.
void BM_direction_dense(benchmark::State& state) {
  const RelaxedProblem prob =
      rls_problem(state.range(0), 20, state.range(1), 1e-3);
  Rng rng(9);
  const Iterate it = random_interior_iterate(prob, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(dense_kkt_direction(prob, it));
}
BENCHMARK(BM_direction_dense)
    ->Args({5, 10})
    ->Args({10, 10})
    ->Args({10, 30})
    ->Args({40, 10});

void BM_solve_distributed(benchmark::State& state) {
  const RelaxedProblem prob =
      rls_problem(state.range(0), 20, state.range(1), 1e-3);
  const SolverConfig cfg;
  for (auto _ : state) {
    const SolveResult res = solve_distributed(prob, cfg);
    benchmark::DoNotOptimize(res.solution.iterations);
  }
}
BENCHMARK(BM_solve_distributed)->Args({5, 5})->Args({10, 10})
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
