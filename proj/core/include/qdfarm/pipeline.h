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

#ifndef QDFARM_PIPELINE_H
#define QDFARM_PIPELINE_H

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdfarm/extract.h"
#include "qdfarm/imaging.h"

namespace qdfarm {

struct PipelineConfig {
    std::size_t drift_window = 100;
    ClaheParams clahe;
    CannyParams canny;
    HoughParams hough;
    RefineParams refine;
    /// Minimum zero-bias peak prominence as a fraction of the robust
    /// (1st to 99th percentile) response range of the corrected map.
    double peak_prominence = 0.2;
    ScoreWeights weights;
    ClassifierConfig classifier;
};

/// Intermediate products of one analysis, for debugging and tests.
struct PipelineTrace {
    ChargeStabilityMap corrected;  ///< After differentiation and drift removal.
    ChargeStabilityMap equalized;  ///< After CLAHE.
    BinaryEdgeMap edges;
    std::vector<Segment> segments;
    std::vector<double> peaks;
    std::vector<ScoredPair> pairs;
    ClassFeatures features;
};

struct DeviceResult {
    std::string device_id;
    MapMode mode = MapMode::Rf;
    DeviceClass device_class = DeviceClass::Bad;
    std::optional<DotParameters> params;  ///< Set for Good devices.
    double score = 0.0;                   ///< Total score of the selected pair.
    std::optional<double> snr;            ///< Zero-bias peak SNR of Good devices.
    std::size_t segment_count = 0;
    std::size_t peak_count = 0;
    std::size_t pair_count = 0;
    std::vector<std::string> rejections;  ///< Filter reasons of higher-ranked pairs.
    std::string error;                    ///< Non-empty when analysis failed.

    bool ok() const { return error.empty(); }
};

/// Runs the full chain on one map: dc maps are differentiated, then drift
/// removal, CLAHE, Canny, Hough, zero-bias peak finding, pair scoring,
/// physicality filtering and classification. Throws std::invalid_argument
/// for maps that do not span zero bias.
DeviceResult analyze_map(const ChargeStabilityMap &map, const PipelineConfig &config = {},
                         PipelineTrace *trace = nullptr);

/// Worker count from QDFARM_WORKERS if set to a positive integer, else the
/// number of hardware threads.
unsigned default_worker_count();

/// Analyzes `count` maps with `workers` threads. `load(i)` produces map i and
/// may throw; failures are recorded in the result's error field under the id
/// "item-<i>" when the map never loaded. Results are
/// sorted by device_id, so output is independent of the worker count.
std::vector<DeviceResult> analyze_batch(std::size_t count, const std::function<ChargeStabilityMap(std::size_t)> &load,
                                        const PipelineConfig &config = {}, unsigned workers = 0);

std::vector<DeviceResult> analyze_maps(std::span<const ChargeStabilityMap> maps, const PipelineConfig &config = {},
                                       unsigned workers = 0);

}  // namespace qdfarm

#endif  // QDFARM_PIPELINE_H
