// Microbenchmarks for the hot paths: dynamics assembly, QP construction,
// full solves, and cached-factorization re-application. The synthetic sizes
// expose the O(n^3) build vs O(n^2) apply split.

#include <benchmark/benchmark.h>

#include "edgewbc/episode.hpp"

namespace {

using namespace edgewbc;

struct BipedFixture {
  RobotModel model = default_biped_model();
  RobotState state;
  ContactSet contacts;
  std::vector<TaskSpec> tasks;
  QpProblem problem;
  Solution solution;

  BipedFixture() {
    contacts.frames = {model.contact_frame_index("l_foot_point"),
                       model.contact_frame_index("r_foot_point")};
    state = solve_initial_pose(model, {{contacts.frames[0], -0.1}, {contacts.frames[1], 0.1}},
                               0.0, 0.8);
    tasks = {make_com_task(Vec2(0.0, 0.8)),
             make_posture_task(state.q.tail(model.num_joints()))};
    problem = build_problem(model, state, tasks, contacts, 0.0);
    solution = solve(problem);
  }
};

BipedFixture& biped() {
  static BipedFixture f;
  return f;
}

// Equality-constrained synthetic instance of decision size n (no
// inequalities, so a solve is exactly one factorization pass).
QpProblem synthetic_problem(int n, std::uint64_t seed) {
  Rng rng(seed);
  QpProblem p;
  p.n = n;
  p.nv = n;
  const int me = n / 4;
  p.A_eq = Mat(me, n);
  p.C = Mat(n + 4, n);
  Vec y0(n);
  for (int i = 0; i < n; ++i) y0[i] = rng.gaussian();
  for (int i = 0; i < me; ++i)
    for (int j = 0; j < n; ++j) p.A_eq(i, j) = rng.gaussian();
  p.b_eq = p.A_eq * y0;
  for (int i = 0; i < p.C.rows(); ++i)
    for (int j = 0; j < n; ++j) p.C(i, j) = rng.gaussian();
  p.d = Vec(p.C.rows());
  for (int i = 0; i < p.d.size(); ++i) p.d[i] = rng.gaussian();
  p.A_in = Mat::Zero(0, n);
  p.b_in = Vec::Zero(0);
  return p;
}

void BM_mass_matrix(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state) benchmark::DoNotOptimize(mass_matrix(f.model, f.state.q));
}
BENCHMARK(BM_mass_matrix);

void BM_bias_forces(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state) benchmark::DoNotOptimize(bias_forces(f.model, f.state.q, f.state.v));
}
BENCHMARK(BM_bias_forces);

void BM_build_problem(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state)
    benchmark::DoNotOptimize(build_problem(f.model, f.state, f.tasks, f.contacts, 0.0));
}
BENCHMARK(BM_build_problem);

void BM_build_b(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        build_b(f.model, f.state, f.tasks, f.contacts, f.solution.active, 0.0));
}
BENCHMARK(BM_build_b);

void BM_solve_biped(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state) benchmark::DoNotOptimize(solve(f.problem));
}
BENCHMARK(BM_solve_biped);

void BM_solve_biped_warm(benchmark::State& state) {
  const auto& f = biped();
  for (auto _ : state) benchmark::DoNotOptimize(solve(f.problem, &f.solution.active));
}
BENCHMARK(BM_solve_biped_warm);

void BM_apply_biped(benchmark::State& state) {
  const auto& f = biped();
  Rng rng(5);
  Vec b(f.solution.decomp.rhs_size());
  for (int i = 0; i < b.size(); ++i) b[i] = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(f.solution.decomp.apply(b));
}
BENCHMARK(BM_apply_biped);

void BM_cycle_rhs_and_apply(benchmark::State& state) {
  // The whole per-cycle robot-side path: rebuild the right-hand side from a
  // fresh state, re-apply the cached factorization, extract torques.
  const auto& f = biped();
  for (auto _ : state) {
    const Vec b = build_b(f.model, f.state, f.tasks, f.contacts, f.solution.active, 0.0);
    const Vec y = f.solution.decomp.apply(b);
    benchmark::DoNotOptimize(extract_torque(f.model, f.state, f.contacts, y));
  }
}
BENCHMARK(BM_cycle_rhs_and_apply);

void BM_solve_synthetic(benchmark::State& state) {
  const QpProblem p = synthetic_problem(static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(solve(p));
}
BENCHMARK(BM_solve_synthetic)->Arg(16)->Arg(32)->Arg(64);

void BM_apply_synthetic(benchmark::State& state) {
  const QpProblem p = synthetic_problem(static_cast<int>(state.range(0)), 11);
  const Solution sol = solve(p);
  Rng rng(17);
  Vec b(sol.decomp.rhs_size());
  for (int i = 0; i < b.size(); ++i) b[i] = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(sol.decomp.apply(b));
}
BENCHMARK(BM_apply_synthetic)->Arg(16)->Arg(32)->Arg(64);

void BM_channel_sample(benchmark::State& state) {
  DelayChannel ch(ChannelConfig::preset("smart_factory"), 3);
  std::int64_t slot = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ch.sample(slot % 100000));
    ++slot;
  }
}
BENCHMARK(BM_channel_sample);

}  // namespace

BENCHMARK_MAIN();
