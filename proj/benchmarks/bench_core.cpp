#include <benchmark/benchmark.h>

#include "ctxrace/config.hpp"
#include "ctxrace/policy.hpp"

using namespace ctxrace;

namespace {

const Scenario& scenario(int adversaries) {
    static const Scenario one = [] {
        EnvConfig env;
        env.n_adversaries = 1;
        return make_scenario(env, tracks::oval());
    }();
    static const Scenario three = [] {
        EnvConfig env;
        env.n_adversaries = 3;
        return make_scenario(env, tracks::oval());
    }();
    return adversaries == 1 ? one : three;
}

void BM_EnvStep(benchmark::State& state) {
    const Scenario& sc = scenario(static_cast<int>(state.range(0)));
    RaceEnv env = sc.make_env();
    RacelinePolicy policy(sc.raceline, sc.env.vehicle, 0.25);
    std::uint64_t seed = 0;
    StepResult s;
    s.done = true;
    for (auto _ : state) {
        if (s.done) {
            state.PauseTiming();
            const ResetResult r = env.reset(++seed, Context{});
            policy.begin_episode(seed, r);
            s.obs = r.obs;
            s.info = r.info;
            s.done = false;
            state.ResumeTiming();
        }
        s = env.step(policy.act(s.obs, s.info, s.reward));
        benchmark::DoNotOptimize(s.reward);
    }
}
BENCHMARK(BM_EnvStep)->Arg(1)->Arg(3);

void BM_LidarScan(benchmark::State& state) {
    const Track& track = *scenario(1).track;
    const LidarConfig cfg;
    VehicleState v;
    v.x = 0.0;
    v.y = -6.0;
    for (auto _ : state) {
        LidarScan s = scan(v, ObstacleSet{track.walls(), {}}, cfg);
        benchmark::DoNotOptimize(s.beams.data());
    }
}
BENCHMARK(BM_LidarScan);

void BM_TrackProjection(benchmark::State& state) {
    const Track& track = *scenario(1).track;
    ProjectionCache cache;
    const bool cached = state.range(0) != 0;
    double s = 0.0;
    for (auto _ : state) {
        s += 0.05;
        if (s > track.total_length()) s -= track.total_length();
        const TrackPose pose = track.project(track.point_at(s) + Vec2{0.1, 0.2}, 0.0, cached ? &cache : nullptr);
        benchmark::DoNotOptimize(pose.s);
    }
}
BENCHMARK(BM_TrackProjection)->Arg(0)->Arg(1);

void BM_Raceline(benchmark::State& state) {
    const Track track = tracks::single_corner();
    for (auto _ : state) {
        Raceline r = compute_raceline(track, RacelineParams{});
        benchmark::DoNotOptimize(r.total_length());
    }
}
BENCHMARK(BM_Raceline)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
