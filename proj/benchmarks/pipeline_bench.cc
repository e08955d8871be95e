// Copyright 2026 The qdfarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "qdfarm/imaging.h"
#include "qdfarm/mux.h"
#include "qdfarm/pipeline.h"
#include "qdfarm/sim.h"
#include "qdfarm/stats.h"

namespace {

using namespace qdfarm;

ChargeStabilityMap sample_map() {
    SimDeviceSpec s;
    s.dot = {0.387, 0.741, -0.04, 0.41, std::nullopt};
    s.noise_sigma = kDefaultNoiseSigma;
    s.drift_amplitude = kDefaultDriftAmplitude;
    return synth_map(s, default_vg_axis(), default_vds_axis(), 1, "D0000");
}

const ChargeStabilityMap &map() {
    static const ChargeStabilityMap m = sample_map();
    return m;
}

void BM_SynthMap(benchmark::State &state) {
    SimDeviceSpec s;
    s.dot = {0.387, 0.741, -0.04, std::nullopt, std::nullopt};
    s.noise_sigma = kDefaultNoiseSigma;
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(synth_map(s, default_vg_axis(), default_vds_axis(), ++seed));
}
BENCHMARK(BM_SynthMap);

void BM_RemoveDrift(benchmark::State &state) {
    for (auto _ : state) benchmark::DoNotOptimize(remove_drift(map()));
}
BENCHMARK(BM_RemoveDrift);

void BM_Clahe(benchmark::State &state) {
    auto m = remove_drift(map());
    for (auto _ : state) benchmark::DoNotOptimize(clahe(m));
}
BENCHMARK(BM_Clahe);

void BM_Canny(benchmark::State &state) {
    auto m = clahe(remove_drift(map()));
    for (auto _ : state) benchmark::DoNotOptimize(canny(m));
}
BENCHMARK(BM_Canny);

void BM_Hough(benchmark::State &state) {
    auto e = canny(clahe(remove_drift(map())));
    for (auto _ : state) benchmark::DoNotOptimize(hough_segments(e));
}
BENCHMARK(BM_Hough);

void BM_RefineSegments(benchmark::State &state) {
    auto m = remove_drift(map());
    auto segs = hough_segments(canny(clahe(m)));
    for (auto _ : state) benchmark::DoNotOptimize(refine_segments(m, segs));
}
BENCHMARK(BM_RefineSegments);

void BM_AnalyzeMap(benchmark::State &state) {
    for (auto _ : state) benchmark::DoNotOptimize(analyze_map(map()));
}
BENCHMARK(BM_AnalyzeMap)->Unit(benchmark::kMillisecond);

void BM_HmcFit(benchmark::State &state) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> vth(0.173, 0.015), noise(0.0, 0.016);
    std::vector<DataPoint> data;
    for (int i = 0; i < 200; ++i) {
        double x = vth(rng);
        data.push_back({x, 1.01 * x + 0.21 + noise(rng)});
    }
    HmcConfig cfg;
    cfg.chains = static_cast<int>(state.range(0));
    cfg.n_samples = 2000;
    for (auto _ : state) benchmark::DoNotOptimize(hmc_fit(data, RegressionModel{}, cfg));
}
BENCHMARK(BM_HmcFit)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ScanTime(benchmark::State &state) {
    auto plan = default_scan_plan();
    for (auto _ : state) benchmark::DoNotOptimize(scan_time(plan));
}
BENCHMARK(BM_ScanTime);

}  // namespace

BENCHMARK_MAIN();
