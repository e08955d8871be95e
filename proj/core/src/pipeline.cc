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

#include "qdfarm/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "qdfarm/rfchain.h"
#include "qdfarm/stats.h"

namespace qdfarm {

namespace {

bool is_closing(const ScoredPair &pair, std::span<const double> peaks, const ChargeStabilityMap &map,
                const ClassifierConfig &config) {
    if (std::abs(pair.crossing_vds) > config.closing_vds_fraction * 0.5 * map.vds().span()) return false;
    const double match = config.peak_match_pixels * map.vg().step();
    return std::any_of(peaks.begin(), peaks.end(), [&](double pk) { return std::abs(pk - pair.crossing_vg) <= match; });
}

std::optional<double> peak_snr(const ChargeStabilityMap &map, double v_1e) {
    const std::size_t c = map.vg().nearest(v_1e);
    const std::size_t guard = 12;
    if (c < guard + 16) return std::nullopt;
    const std::size_t zr = map.zero_bias_row();
    Region peak{zr, zr + 1, c > 0 ? c - 1 : 0, std::min(c + 2, map.cols())};
    Region background{0, map.rows(), 0, c - guard};
    try {
        return snr_of_map(map, peak, background);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

}  // namespace

DeviceResult analyze_map(const ChargeStabilityMap &map, const PipelineConfig &config, PipelineTrace *trace) {
    if (!map.spans_zero_bias()) {
        throw std::invalid_argument("map " + map.device_id() + " does not span V_DS = 0");
    }
    DeviceResult result;
    result.device_id = map.device_id();
    result.mode = map.mode();

    ChargeStabilityMap corrected =
        remove_drift(map.mode() == MapMode::DcCurrent ? differentiate_dc(map) : map, config.drift_window);
    ChargeStabilityMap equalized = clahe(corrected, config.clahe);
    BinaryEdgeMap edges = canny(equalized, config.canny);
    std::vector<Segment> segments = refine_segments(corrected, hough_segments(edges, config.hough), config.refine);

    std::vector<double> peaks;
    {
        double lo = quantile(corrected.values(), 0.01);
        double hi = quantile(corrected.values(), 0.99);
        if (hi > lo) {
            peaks = find_peaks(corrected.row(corrected.zero_bias_row()), corrected.vg(),
                               config.peak_prominence * (hi - lo));
        }
    }
    std::vector<ScoredPair> pairs = score_pairs(segments, peaks, corrected.vg(), corrected.vds(), config.weights);
    ClassFeatures features = class_features(corrected, segments, peaks, pairs, config.classifier);
    result.device_class = classify(features, config.classifier);
    result.segment_count = segments.size();
    result.peak_count = peaks.size();
    result.pair_count = pairs.size();

    if (result.device_class == DeviceClass::Good) {
        const ScoredPair *chosen = nullptr;
        for (const auto &pair : pairs) {
            FilterResult f = physical_filter(params_from_pair(pair));
            if (!f.accepted) {
                if (std::find(result.rejections.begin(), result.rejections.end(), f.reason) ==
                    result.rejections.end()) {
                    result.rejections.push_back(f.reason);
                }
                continue;
            }
            if (is_closing(pair, peaks, corrected, config.classifier)) {
                chosen = &pair;
                break;
            }
        }
        if (chosen) {
            DotParameters params = params_from_pair(*chosen);
            result.score = chosen->total_score;
            // Second electron: the next peak that also carries a closing pair.
            const double min_gap = 3.0 * corrected.vg().step();
            for (double pk : peaks) {
                if (pk <= params.v_1e + min_gap) continue;
                bool paired = std::any_of(pairs.begin(), pairs.end(), [&](const ScoredPair &p) {
                    return &p != chosen && std::abs(p.crossing_vg - pk) <= config.classifier.peak_match_pixels *
                                                                               corrected.vg().step() &&
                           physical_filter(params_from_pair(p)).accepted &&
                           is_closing(p, peaks, corrected, config.classifier);
                });
                if (paired) {
                    params.v_2e = pk;
                    params.charging_energy = charging_energy(pk - params.v_1e, params.alpha_g);
                    break;
                }
            }
            result.snr = peak_snr(corrected, params.v_1e);
            result.params = params;
        }
    }

    if (trace) {
        trace->corrected = std::move(corrected);
        trace->equalized = std::move(equalized);
        trace->edges = std::move(edges);
        trace->segments = std::move(segments);
        trace->peaks = std::move(peaks);
        trace->pairs = std::move(pairs);
        trace->features = features;
    }
    return result;
}

unsigned default_worker_count() {
    if (const char *env = std::getenv("QDFARM_WORKERS")) {
        char *end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<DeviceResult> analyze_batch(std::size_t count, const std::function<ChargeStabilityMap(std::size_t)> &load,
                                        const PipelineConfig &config, unsigned workers) {
    if (workers == 0) workers = default_worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::vector<DeviceResult> results(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            std::string id = "item-" + std::to_string(i);
            try {
                ChargeStabilityMap map = load(i);
                id = map.device_id();
                results[i] = analyze_map(map, config);
            } catch (const std::exception &e) {
                results[i] = DeviceResult{};
                results[i].device_id = id;
                results[i].error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const DeviceResult &a, const DeviceResult &b) { return a.device_id < b.device_id; });
    return results;
}

std::vector<DeviceResult> analyze_maps(std::span<const ChargeStabilityMap> maps, const PipelineConfig &config,
                                       unsigned workers) {
    return analyze_batch(maps.size(), [&](std::size_t i) { return maps[i]; }, config, workers);
}

}  // namespace qdfarm
