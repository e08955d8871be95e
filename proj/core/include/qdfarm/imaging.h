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

#ifndef QDFARM_IMAGING_H
#define QDFARM_IMAGING_H

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qdfarm/map.h"

namespace qdfarm {

/// Central-difference dI_D/dV_DS (one-sided on the first and last rows).
/// Throws std::invalid_argument unless the map is DcCurrent with >= 3 rows.
ChargeStabilityMap differentiate_dc(const ChargeStabilityMap &map);

/// Subtracts from every row the mean of its first min(window, row length)
/// samples.
ChargeStabilityMap remove_drift(const ChargeStabilityMap &map, std::size_t window = 100);

struct ClaheParams {
    int tile_rows = 8;
    int tile_cols = 8;
    double clip_limit = 0.01;  ///< Fraction of the tile pixel count per histogram bin.
    int bins = 256;
};

/// Contrast-limited adaptive histogram equalization. The map is first scaled
/// to [0, 1] by its global range; each tile's clipped histogram is equalized
/// and the tile mappings are blended bilinearly. Output values lie in [0, 1].
/// Throws std::invalid_argument on empty tiles or a non-positive clip limit.
ChargeStabilityMap clahe(const ChargeStabilityMap &map, const ClaheParams &params = {});

struct BinaryEdgeMap {
    Axis vg;
    Axis vds;
    std::vector<std::uint8_t> pixels;  ///< Row-major like ChargeStabilityMap.

    std::size_t rows() const { return vds.count; }
    std::size_t cols() const { return vg.count; }
    bool at(std::size_t r, std::size_t c) const { return pixels[r * vg.count + c] != 0; }
    std::size_t count() const;
};

struct CannyParams {
    double gaussian_sigma = 1.5;  ///< pixels
    /// Absolute hysteresis thresholds on the Sobel gradient magnitude. When
    /// unset, the quantiles below of the magnitude image are used.
    std::optional<double> low_threshold;
    std::optional<double> high_threshold;
    double low_quantile = 0.70;
    double high_quantile = 0.90;
};

/// Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// hysteresis with 8-connectivity. Throws std::invalid_argument unless
/// low < high.
BinaryEdgeMap canny(const ChargeStabilityMap &map, const CannyParams &params = {});

/// A straight edge segment. Endpoints are in axis units (V_GS, V_DS).
struct Segment {
    double vg0 = 0.0, vds0 = 0.0;
    double vg1 = 0.0, vds1 = 0.0;
    double slope = 0.0;   ///< dV_DS / dV_GS
    double length = 0.0;  ///< pixels
    int support = 0;      ///< Edge pixels on the segment.

    /// V_DS of the infinite line through the segment at `vg`.
    double vds_at(double vg) const { return vds0 + slope * (vg - vg0); }
};

struct HoughParams {
    int accumulator_threshold = 10;
    /// Minimum segment length in pixels; a negative value means 15% of the
    /// V_DS pixel count.
    double min_length = -1.0;
    int max_gap = 3;
    double angle_resolution_deg = 1.0;
    double distance_resolution = 1.0;
    /// Perpendicular tolerance (pixels) when walking along a candidate line.
    int band = 1;
    std::uint64_t seed = 0x5EED;
};

/// Progressive probabilistic Hough transform. Candidate lines found in the
/// accumulator are walked along the edge map (allowing gaps up to max_gap),
/// refit by total least squares on the collected pixels and walked again.
/// Segments that are exactly vertical in pixel space (infinite slope) are
/// dropped.
std::vector<Segment> hough_segments(const BinaryEdgeMap &edges, const HoughParams &params = {});

struct RefineParams {
    double gaussian_sigma = 1.0;  ///< pixels
    int search = 3;               ///< Half-width (pixels) of the per-row search window.
    /// Rows with an opposite-polarity edge within this many pixels of the
    /// found edge are skipped.
    int isolation = 4;
    /// Rows with |V_DS| below this fraction of the V_DS half-span are skipped:
    /// thermal broadening rounds the edges near zero bias.
    double zero_bias_exclusion = 0.3;
    std::size_t min_rows = 8;
};

/// Re-locates steep segments (more than one row per column) with subpixel
/// accuracy: in every covered row the horizontal gradient peak of the smoothed
/// map is found near the segment and interpolated parabolically, and a line is
/// fitted to those positions with one round of outlier rejection. Shallow
/// segments and segments with too few usable rows are returned unchanged.
std::vector<Segment> refine_segments(const ChargeStabilityMap &map, std::span<const Segment> segments,
                                     const RefineParams &params = {});

/// Indices of local maxima whose topographic prominence is at least
/// `min_prominence`, in increasing order. Flat peaks report their midpoint.
std::vector<std::size_t> find_peak_indices(std::span<const double> trace, double min_prominence);

/// Prominence of the local maximum at `index`.
double peak_prominence(std::span<const double> trace, std::size_t index);

/// find_peak_indices mapped to V_GS values.
std::vector<double> find_peaks(std::span<const double> trace, const Axis &vg, double min_prominence);

}  // namespace qdfarm

#endif  // QDFARM_IMAGING_H
