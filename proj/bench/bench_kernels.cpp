// Serial reference vs OpenMP for the parallel kernels. Each pair runs on the same input.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "lcm/env/env.hpp"
#include "lcm/population/population.hpp"
#include "lcm/rules/engine.hpp"
#include "lcm/simulate/simulate.hpp"
#include "lcm/solver/dp.hpp"
#include "lcm/solver/reduced_env.hpp"
#include "support/snapshots.hpp"

using namespace lcm;

namespace {

const env::Model& model() {
    static const env::Model m = env::load_model(LCM_PARAMS_DIR, 2023);
    return m;
}

const std::vector<rules::HouseholdSnapshot>& snapshots() {
    static const auto v = [] {
        Rng rng(1);
        std::vector<rules::HouseholdSnapshot> out;
        for (int i = 0; i < 20000; ++i) out.push_back(testing::random_household(rng));
        return out;
    }();
    return v;
}

void BM_NetIncomeBatch_Serial(benchmark::State& st) {
    std::vector<rules::CashFlows> out(snapshots().size());
    for (auto _ : st) rules::net_income_batch_serial(snapshots(), out, model().rules);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(out.size()));
}
void BM_NetIncomeBatch_OpenMP(benchmark::State& st) {
    std::vector<rules::CashFlows> out(snapshots().size());
    for (auto _ : st) rules::net_income_batch(snapshots(), out, model().rules);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(out.size()));
}

const solver::ReducedModel& reduced() {
    static const solver::ReducedModel m(model());
    return m;
}

void BM_DpSolve_Serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(solver::dp_solve_serial(reduced()));
}
void BM_DpSolve_OpenMP(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(solver::dp_solve(reduced()));
}

void BM_PopulationStep_Serial(benchmark::State& st) {
    const auto base = env::make_cohort(5000, model(), 3);
    for (auto _ : st) {
        st.PauseTiming();
        auto pop = base;
        st.ResumeTiming();
        for (auto& hh : pop.households) population::mortality_step(hh, model().demo);
        for (auto& hh : pop.households) population::fertility_step(hh, model().demo);
    }
}
void BM_PopulationStep_OpenMP(benchmark::State& st) {
    const auto base = env::make_cohort(5000, model(), 3);
    for (auto _ : st) {
        st.PauseTiming();
        auto pop = base;
        st.ResumeTiming();
        population::mortality_step(pop, model().demo);
        population::fertility_step(pop, model().demo);
    }
}

// run_cohort has no separate serial path; one thread is the reference.
void cohort(benchmark::State& st, int threads) {
    const solver::PolicyNetwork net(env::kFeatureCount, {256, 256, 128}, env::kActionCount, 1);
    const auto pop = env::make_cohort(200, model(), 5);
    const int keep = omp_get_max_threads();
    omp_set_num_threads(threads);
    for (auto _ : st) benchmark::DoNotOptimize(simulate::run_cohort(net, pop, model(), 9, {solver::ActMode::Sample, true, false}));
    omp_set_num_threads(keep);
}
void BM_RunCohort_Serial(benchmark::State& st) { cohort(st, 1); }
void BM_RunCohort_OpenMP(benchmark::State& st) { cohort(st, omp_get_num_procs()); }

}  // namespace

BENCHMARK(BM_NetIncomeBatch_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NetIncomeBatch_OpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpSolve_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpSolve_OpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PopulationStep_Serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PopulationStep_OpenMP)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RunCohort_Serial)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_RunCohort_OpenMP)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
