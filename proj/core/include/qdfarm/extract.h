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

#ifndef QDFARM_EXTRACT_H
#define QDFARM_EXTRACT_H

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdfarm/dot.h"
#include "qdfarm/imaging.h"
#include "qdfarm/map.h"

namespace qdfarm {

/// Per-criterion values for a candidate edge pair. In ScoredPair::raw these
/// are the measured quantities; in ScoredPair::standardized they are z-scores
/// oriented so that larger is better.
struct ScoreComponents {
    double length = 0.0;               ///< Total segment length, pixels.
    double vds_proximity = 0.0;        ///< |crossing V_DS| / V_DS span.
    double peak_proximity = 0.0;       ///< Distance to nearest peak / V_GS span.
    double gradient_similarity = 0.0;  ///< |ln(m1 / |m2|)|.
    double low_vg = 0.0;               ///< (crossing V_GS - vg.min) / V_GS span.
};

struct ScoreWeights {
    double length = 1.0;
    double vds_proximity = 1.0;
    double peak_proximity = 1.0;
    double gradient_similarity = 1.0;
    double low_vg = 1.0;
};

struct ScoredPair {
    Segment positive;
    Segment negative;
    double crossing_vg = 0.0;
    double crossing_vds = 0.0;
    ScoreComponents raw;
    ScoreComponents standardized;
    double total_score = 0.0;
};

/// Crossing of the infinite lines through two segments of opposite slope.
std::pair<double, double> crossing_point(const Segment &positive, const Segment &negative);

/// Scores every (positive, negative) segment pair and returns them ranked by
/// total score, ties broken by lower crossing V_GS and then longer total
/// length. Components with zero spread across pairs standardize to zero.
std::vector<ScoredPair> score_pairs(std::span<const Segment> segments, std::span<const double> peaks, const Axis &vg,
                                    const Axis &vds, const ScoreWeights &weights = {});

/// alpha_g = (1/|m1| + 1/|m2|)^-1, asymmetry = (m1 + m2)/(m1 - m2) and
/// v_1e = crossing V_GS. Throws std::invalid_argument unless the slopes are
/// finite, nonzero and of opposite sign.
DotParameters params_from_pair(const ScoredPair &pair);

struct FilterResult {
    bool accepted = true;
    std::string reason;  ///< Empty when accepted.
};

/// Rejects lever arms outside [0.5, 1], |asymmetry| >= 1 and
/// |asymmetry| + alpha_g > 1.
FilterResult physical_filter(const DotParameters &params);

struct ClassifierConfig {
    /// Fraction of pixels above half the robust response range beyond which a
    /// map is treated as dominated by background conduction.
    double max_conducting_fraction = 0.22;
    /// |crossing V_DS| below this fraction of the V_DS half-span counts as a
    /// closing diamond.
    double closing_vds_fraction = 0.15;
    /// Largest distance (V_GS pixels) between a closing crossing and a peak.
    double peak_match_pixels = 4.0;
    /// Segments with |slope| in this band can be dot edges. Physical pairs
    /// have slopes between 2/3 and 2; the band adds some slack.
    double min_edge_slope = 0.6;
    double max_edge_slope = 2.2;
    /// |ln(slope / reference)| below which an edge matches a pair's slope.
    double slope_match = 0.12;
    /// Good maps need at most this unanchored edge fraction and at least this
    /// consistent edge fraction.
    double max_unanchored_fraction = 0.35;
    double min_consistent_fraction = 0.65;
};

struct ClassFeatures {
    double conducting_fraction = 0.0;
    std::size_t peak_count = 0;
    std::size_t accepted_pairs = 0;
    std::size_t closing_pairs = 0;  ///< Accepted pairs crossing near zero bias at a peak.
    std::size_t open_pairs = 0;     ///< Pairs crossing outside the measured V_DS window.
    std::size_t edge_segments = 0;  ///< Segments with a plausible edge slope.
    /// Length-weighted fraction of edge segments whose line misses every
    /// zero-bias peak. Every edge of a single dot passes through one.
    double unanchored_fraction = 0.0;
    /// Largest length-weighted fraction of edge segments sharing the slopes of
    /// one closing pair. A single dot has only two edge slopes.
    double consistent_fraction = 0.0;
};

/// Computes classifier features. `map` is the drift-corrected map the peaks
/// were found on.
ClassFeatures class_features(const ChargeStabilityMap &map, std::span<const Segment> segments,
                             std::span<const double> peaks, std::span<const ScoredPair> pairs,
                             const ClassifierConfig &config = {});

/// Bad when background conduction dominates or the map shows neither peaks nor
/// edges; Good when an accepted pair closes at zero bias on a peak and the
/// remaining edges agree with a single dot; Multi otherwise.
DeviceClass classify(const ClassFeatures &features, const ClassifierConfig &config = {});

DeviceClass classify(const ChargeStabilityMap &map, std::span<const Segment> segments, std::span<const double> peaks,
                     std::span<const ScoredPair> pairs, const ClassifierConfig &config = {});

/// E_C = |e| delta_vg alpha_g in meV. Throws std::domain_error unless
/// delta_vg > 0 and alpha_g in (0, 1].
double charging_energy(double delta_vg, double alpha_g);

/// Gamma = I_D / |e|. Throws std::domain_error for negative or non-finite
/// current.
double gross_tunnel_rate(double i_d);

/// 1/Gamma = 1/Gamma_S + 1/Gamma_D. Either rate may be +infinity. Throws
/// std::domain_error for non-positive rates.
double harmonic_rate(double gamma_s, double gamma_d);

}  // namespace qdfarm

#endif  // QDFARM_EXTRACT_H
