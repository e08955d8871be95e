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

#include "qdfarm/extract.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qdfarm/stats.h"

namespace qdfarm {

std::pair<double, double> crossing_point(const Segment &positive, const Segment &negative) {
    const double mp = positive.slope;
    const double mn = negative.slope;
    double vg = (negative.vds0 - positive.vds0 + mp * positive.vg0 - mn * negative.vg0) / (mp - mn);
    return {vg, positive.vds_at(vg)};
}

namespace {

// Standardizes one component across pairs; `sign` orients it so that larger
// is better.
void standardize(std::vector<ScoredPair> &pairs, double ScoreComponents::*field, double sign) {
    const double n = static_cast<double>(pairs.size());
    double mean = 0.0;
    for (const auto &p : pairs) mean += p.raw.*field;
    mean /= n;
    double var = 0.0;
    for (const auto &p : pairs) var += (p.raw.*field - mean) * (p.raw.*field - mean);
    double sd = pairs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    for (auto &p : pairs) {
        p.standardized.*field = sd > 1e-12 * (std::abs(mean) + 1.0) ? sign * (p.raw.*field - mean) / sd : 0.0;
    }
}

}  // namespace

std::vector<ScoredPair> score_pairs(std::span<const Segment> segments, std::span<const double> peaks, const Axis &vg,
                                    const Axis &vds, const ScoreWeights &weights) {
    std::vector<ScoredPair> pairs;
    for (const auto &p : segments) {
        if (!(p.slope > 0.0) || !std::isfinite(p.slope)) continue;
        for (const auto &n : segments) {
            if (!(n.slope < 0.0) || !std::isfinite(n.slope)) continue;
            ScoredPair sp;
            sp.positive = p;
            sp.negative = n;
            std::tie(sp.crossing_vg, sp.crossing_vds) = crossing_point(p, n);
            if (!std::isfinite(sp.crossing_vg) || !std::isfinite(sp.crossing_vds)) continue;
            sp.raw.length = p.length + n.length;
            sp.raw.vds_proximity = std::abs(sp.crossing_vds) / vds.span();
            if (!peaks.empty()) {
                double best = std::numeric_limits<double>::infinity();
                for (double pk : peaks) best = std::min(best, std::abs(sp.crossing_vg - pk));
                sp.raw.peak_proximity = best / vg.span();
            }
            sp.raw.gradient_similarity = std::abs(std::log(p.slope / -n.slope));
            sp.raw.low_vg = (sp.crossing_vg - vg.min) / vg.span();
            pairs.push_back(sp);
        }
    }
    if (pairs.empty()) {
        return pairs;
    }
    standardize(pairs, &ScoreComponents::length, 1.0);
    standardize(pairs, &ScoreComponents::vds_proximity, -1.0);
    standardize(pairs, &ScoreComponents::peak_proximity, -1.0);
    standardize(pairs, &ScoreComponents::gradient_similarity, -1.0);
    standardize(pairs, &ScoreComponents::low_vg, -1.0);
    for (auto &p : pairs) {
        const auto &z = p.standardized;
        p.total_score = weights.length * z.length + weights.vds_proximity * z.vds_proximity +
                        weights.peak_proximity * z.peak_proximity +
                        weights.gradient_similarity * z.gradient_similarity + weights.low_vg * z.low_vg;
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const ScoredPair &a, const ScoredPair &b) {
        if (a.total_score != b.total_score) return a.total_score > b.total_score;
        if (a.crossing_vg != b.crossing_vg) return a.crossing_vg < b.crossing_vg;
        return a.raw.length > b.raw.length;
    });
    return pairs;
}

DotParameters params_from_pair(const ScoredPair &pair) {
    const double m1 = pair.positive.slope;
    const double m2 = pair.negative.slope;
    if (!std::isfinite(m1) || !std::isfinite(m2) || !(m1 > 0.0) || !(m2 < 0.0)) {
        throw std::invalid_argument("params_from_pair: need finite slopes m1 > 0 > m2");
    }
    DotParameters p;
    p.alpha_g = 1.0 / (1.0 / m1 + 1.0 / -m2);
    p.asymmetry = (m1 + m2) / (m1 - m2);
    p.v_1e = pair.crossing_vg;
    return p;
}

FilterResult physical_filter(const DotParameters &params) {
    constexpr double tol = 1e-12;
    if (!(params.alpha_g <= 1.0 + tol)) return {false, "lever arm above 1"};
    if (!(params.alpha_g >= 0.5)) return {false, "lever arm below 0.5"};
    if (!(std::abs(params.asymmetry) < 1.0)) return {false, "asymmetry magnitude at least 1"};
    if (std::abs(params.asymmetry) + params.alpha_g > 1.0 + tol) {
        return {false, "lever arm plus asymmetry above 1"};
    }
    return {};
}

ClassFeatures class_features(const ChargeStabilityMap &map, std::span<const Segment> segments,
                             std::span<const double> peaks, std::span<const ScoredPair> pairs,
                             const ClassifierConfig &config) {
    ClassFeatures f;
    f.peak_count = peaks.size();
    if (map.size() > 0) {
        double lo = quantile(map.values(), 0.01);
        double hi = quantile(map.values(), 0.99);
        if (hi > lo) {
            double mid = 0.5 * (lo + hi);
            auto n = std::count_if(map.values().begin(), map.values().end(), [&](double v) { return v > mid; });
            f.conducting_fraction = static_cast<double>(n) / static_cast<double>(map.size());
        }
    }
    const Axis &vds = map.vds();
    const double closing = config.closing_vds_fraction * 0.5 * vds.span();
    const double match = config.peak_match_pixels * map.vg().step();
    auto near_peak = [&](double v) {
        return std::any_of(peaks.begin(), peaks.end(), [&](double pk) { return std::abs(pk - v) <= match; });
    };
    auto is_edge = [&](const Segment &s) {
        double m = std::abs(s.slope);
        return std::isfinite(m) && m >= config.min_edge_slope && m <= config.max_edge_slope;
    };

    double edge_length = 0.0, loose = 0.0;
    for (const auto &seg : segments) {
        if (!is_edge(seg)) continue;
        ++f.edge_segments;
        edge_length += seg.length;
        if (!near_peak(seg.vg0 - seg.vds0 / seg.slope)) loose += seg.length;
    }
    if (edge_length > 0.0) f.unanchored_fraction = loose / edge_length;

    for (const auto &pair : pairs) {
        if (pair.crossing_vds < vds.min || pair.crossing_vds > vds.max) {
            ++f.open_pairs;
        }
        if (!physical_filter(params_from_pair(pair)).accepted) continue;
        ++f.accepted_pairs;
        if (std::abs(pair.crossing_vds) > closing || !near_peak(pair.crossing_vg)) continue;
        ++f.closing_pairs;
        double agree = 0.0;
        for (const auto &seg : segments) {
            if (!is_edge(seg)) continue;
            double ref = seg.slope > 0.0 ? pair.positive.slope : pair.negative.slope;
            if (std::abs(std::log(seg.slope / ref)) < config.slope_match) agree += seg.length;
        }
        if (edge_length > 0.0) f.consistent_fraction = std::max(f.consistent_fraction, agree / edge_length);
    }
    return f;
}

DeviceClass classify(const ClassFeatures &f, const ClassifierConfig &config) {
    if (f.conducting_fraction > config.max_conducting_fraction) return DeviceClass::Bad;
    if (f.closing_pairs > 0 && f.unanchored_fraction <= config.max_unanchored_fraction &&
        f.consistent_fraction >= config.min_consistent_fraction) {
        return DeviceClass::Good;
    }
    if (f.peak_count == 0 && f.edge_segments == 0) return DeviceClass::Bad;
    return DeviceClass::Multi;
}

DeviceClass classify(const ChargeStabilityMap &map, std::span<const Segment> segments, std::span<const double> peaks,
                     std::span<const ScoredPair> pairs, const ClassifierConfig &config) {
    return classify(class_features(map, segments, peaks, pairs, config), config);
}

double charging_energy(double delta_vg, double alpha_g) {
    if (!(delta_vg > 0.0) || !(alpha_g > 0.0) || alpha_g > 1.0) {
        throw std::domain_error("charging_energy: need delta_vg > 0 and alpha_g in (0, 1]");
    }
    return delta_vg * alpha_g * 1e3;
}

double gross_tunnel_rate(double i_d) {
    if (!(i_d >= 0.0) || !std::isfinite(i_d)) {
        throw std::domain_error("gross_tunnel_rate: current must be finite and non-negative");
    }
    return i_d / kElementaryCharge;
}

double harmonic_rate(double gamma_s, double gamma_d) {
    if (!(gamma_s > 0.0) || !(gamma_d > 0.0)) {
        throw std::domain_error("harmonic_rate: rates must be positive");
    }
    return 1.0 / (1.0 / gamma_s + 1.0 / gamma_d);
}

}  // namespace qdfarm
