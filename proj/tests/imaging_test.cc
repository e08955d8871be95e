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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qdfarm/imaging.h"
#include "qdfarm/sim.h"
#include "qdfarm/stats.h"

namespace qdfarm {
namespace {

ChargeStabilityMap blank(std::size_t cols, std::size_t rows, MapMode mode = MapMode::Rf) {
    return ChargeStabilityMap("T", mode, Axis{0.2, 0.6, cols}, Axis{-0.02, 0.02, rows});
}

template <class F>
ChargeStabilityMap filled(std::size_t cols, std::size_t rows, F f, MapMode mode = MapMode::Rf) {
    auto m = blank(cols, rows, mode);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = f(m.vg().at(c), m.vds().at(r), r, c);
    }
    return m;
}

// ---------------------------------------------------------------------------
// differentiate_dc

TEST(DifferentiateDc, OhmicPlaneGivesConductance) {
    auto m = filled(32, 16, [](double, double vds, auto, auto) { return 1e-6 * vds; }, MapMode::DcCurrent);
    auto d = differentiate_dc(m);
    EXPECT_EQ(d.mode(), MapMode::DcDerivative);
    for (double v : d.values()) EXPECT_NEAR(v, 1e-6, 1e-15);
}

TEST(DifferentiateDc, BiasIndependentCurrentGivesZero) {
    auto m = filled(32, 16, [](double vg, double, auto, auto) { return 3e-9 * vg; }, MapMode::DcCurrent);
    for (double v : differentiate_dc(m).values()) EXPECT_NEAR(v, 0.0, 1e-18);
}

TEST(DifferentiateDc, RejectsRfMaps) {
    EXPECT_THROW(differentiate_dc(blank(8, 8)), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// remove_drift

TEST(RemoveDrift, ZeroesRowOffsets) {
    auto m = filled(200, 10, [](double, double, std::size_t r, std::size_t c) { return 0.3 * r + 0.001 * (c % 7); });
    auto d = remove_drift(m);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 100; ++c) s += d.at(r, c);
        EXPECT_NEAR(s / 100, 0.0, 1e-12);
    }
}

TEST(RemoveDrift, ShortRowsUseWholeRow) {
    auto m = filled(20, 4, [](double, double, std::size_t r, std::size_t c) { return r + 0.1 * c; });
    auto d = remove_drift(m);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 20; ++c) s += d.at(r, c);
        EXPECT_NEAR(s, 0.0, 1e-12);
    }
}

TEST(RemoveDrift, OffsetFreeMapUnchangedAndIdempotent) {
    auto m = filled(150, 6, [](double, double, std::size_t, std::size_t c) { return c < 100 ? 0.0 : 1.0; });
    EXPECT_EQ(remove_drift(m), m);
    auto noisy = filled(150, 6, [](double vg, double vds, auto, auto) { return std::sin(40 * vg) + vds; });
    auto once = remove_drift(noisy);
    auto twice = remove_drift(once);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once.values()[i], twice.values()[i], 1e-15);
}

TEST(RemoveDrift, SuppressesSimulatedRandomWalkDrift) {
    SimDeviceSpec s;
    s.dot = {0.45, 0.741, -0.04, std::nullopt, std::nullopt};
    s.drift_amplitude = 0.2;
    auto m = synth_map(s, default_vg_axis(), default_vds_axis(), 4);
    auto baseline_std = [](const ChargeStabilityMap &map) {
        std::vector<double> base;
        for (std::size_t r = 0; r < map.rows(); ++r) {
            double sum = 0;
            for (std::size_t c = 0; c < 60; ++c) sum += map.at(r, c);
            base.push_back(sum / 60);
        }
        return describe(base).std;
    };
    double before = baseline_std(m);
    double after = baseline_std(remove_drift(m));
    EXPECT_GT(before, 0.0);
    EXPECT_LT(after * 5, before);
}

// ---------------------------------------------------------------------------
// clahe

TEST(Clahe, ConstantMapStaysConstant) {
    auto m = filled(64, 32, [](auto...) { return 0.7; });
    auto e = clahe(m);
    for (double v : e.values()) EXPECT_DOUBLE_EQ(v, e.values()[0]);
}

TEST(Clahe, TwoLevelMapSpreadsToExtremes) {
    // Brute-force equalization of a 50/50 two-level histogram maps the low
    // level to 0 and the high level to 1 once the clip never binds.
    auto m = filled(64, 32, [](auto, auto, std::size_t, std::size_t c) { return c < 32 ? 0.4 : 0.6; });
    ClaheParams p;
    p.tile_rows = p.tile_cols = 1;
    p.clip_limit = 1.0;
    auto e = clahe(m, p);
    EXPECT_NEAR(e.at(5, 3), 0.0, 1e-12);
    EXPECT_NEAR(e.at(5, 60), 1.0, 1e-12);
    for (double v : e.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Clahe, SingleTileIsMonotone) {
    // Global equalization preserves order. Tile blending does not in general.
    auto m = filled(96, 48, [](double vg, double vds, auto, auto) { return vg * vg + 0.1 * vds; });
    ClaheParams p;
    p.tile_rows = p.tile_cols = 1;
    auto e = clahe(m, p);
    for (std::size_t r = 0; r < e.rows(); ++r) {
        for (std::size_t c = 1; c < e.cols(); ++c) EXPECT_GE(e.at(r, c), e.at(r, c - 1) - 1e-12);
    }
}

TEST(Clahe, OutputInUnitInterval) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    auto m = filled(100, 50, [&](auto...) { return n(rng); });
    for (double v : clahe(m).values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

// ---------------------------------------------------------------------------
// canny

TEST(Canny, StepEdgeGivesSingleColumnChain) {
    auto m = filled(64, 32, [](auto, auto, std::size_t, std::size_t c) { return c < 30 ? 0.0 : 1.0; });
    CannyParams p;
    p.gaussian_sigma = 1.0;
    p.low_threshold = 0.1;
    p.high_threshold = 0.2;
    auto e = canny(m, p);
    for (std::size_t r = 2; r + 2 < e.rows(); ++r) {
        int n = 0;
        for (std::size_t c = 0; c < e.cols(); ++c) {
            if (e.at(r, c)) {
                ++n;
                EXPECT_TRUE(c == 29 || c == 30) << "row " << r << " col " << c;
            }
        }
        EXPECT_EQ(n, 1) << "row " << r;
    }
}

TEST(Canny, InvariantUnderConstantShift) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 0.1);
    auto m = filled(64, 32, [&](double vg, auto, auto, auto) { return (vg > 0.4) + n(rng); });
    auto shifted = m;
    for (double &v : shifted.values()) v += 5.0;
    EXPECT_EQ(canny(m).pixels, canny(shifted).pixels);
}

TEST(Canny, PureNoiseBelowAbsoluteThresholdIsEmpty) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.01);
    auto m = filled(64, 32, [&](auto...) { return n(rng); });
    CannyParams p;
    p.low_threshold = 0.5;
    p.high_threshold = 1.0;
    EXPECT_EQ(canny(m, p).count(), 0u);
}

TEST(Canny, SimulatedEdgesLieOnAnalyticLines) {
    SimDeviceSpec s;
    s.dot = {0.387, 0.741, -0.04, std::nullopt, std::nullopt};
    auto m = synth_map(s, default_vg_axis(), default_vds_axis(), 1);
    auto e = canny(clahe(remove_drift(m)));
    EdgeSlopes slopes = edge_slopes(0.741, -0.04);
    const double dx = m.vg().step(), dy = m.vds().step();
    std::size_t near = 0, total = 0;
    for (std::size_t r = 0; r < e.rows(); ++r) {
        for (std::size_t c = 0; c < e.cols(); ++c) {
            if (!e.at(r, c)) continue;
            ++total;
            double vg = m.vg().at(c), vds = m.vds().at(r);
            // Pixel distance to each edge line through (v_1e, 0).
            double best = 1e9;
            for (double k : {slopes.positive, slopes.negative}) {
                double px = (vds / k + 0.387 - vg) / dx;  // horizontal offset in pixels
                double py = k * dx / dy;                  // vertical pixels per horizontal pixel
                best = std::min(best, std::abs(px) * std::abs(py) / std::sqrt(1 + py * py));
            }
            near += best <= 2.0;
        }
    }
    ASSERT_GT(total, 100u);
    EXPECT_GT(static_cast<double>(near) / total, 0.8);
}

// ---------------------------------------------------------------------------
// hough_segments

BinaryEdgeMap edge_map(std::size_t cols, std::size_t rows) {
    BinaryEdgeMap e;
    e.vg = Axis{0.0, static_cast<double>(cols - 1), cols};
    e.vds = Axis{0.0, static_cast<double>(rows - 1), rows};
    e.pixels.assign(cols * rows, 0);
    return e;
}

TEST(Hough, DiagonalLine) {
    auto e = edge_map(64, 64);
    for (std::size_t i = 0; i < 64; ++i) e.pixels[i * 64 + i] = 1;
    auto segs = hough_segments(e);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_NEAR(segs[0].slope, 1.0, 0.02);
    EXPECT_GE(segs[0].length, 60.0);
}

TEST(Hough, EmptyMapGivesNothing) {
    EXPECT_TRUE(hough_segments(edge_map(32, 32)).empty());
}

TEST(Hough, SlopeUsesAxisUnits) {
    // Same pixels, V_GS axis compressed 4x: slope scales by 4.
    auto e = edge_map(64, 64);
    for (std::size_t i = 0; i < 64; ++i) e.pixels[i * 64 + i] = 1;
    e.vg = Axis{0.0, 63.0 / 4.0, 64};
    auto segs = hough_segments(e);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_NEAR(segs[0].slope, 4.0, 0.08);
}

TEST(Hough, SimulatedGoodMapRecoversEdgeSlopes) {
    SimDeviceSpec s;
    s.dot = {0.387, 0.741, -0.04, std::nullopt, std::nullopt};
    auto m = synth_map(s, default_vg_axis(), default_vds_axis(), 1);
    auto segs = hough_segments(canny(clahe(remove_drift(m))));
    ASSERT_GE(segs.size(), 2u);
    EdgeSlopes want = edge_slopes(0.741, -0.04);
    // Longest segment of each sign.
    const Segment *pos = nullptr, *neg = nullptr;
    for (const auto &sg : segs) {
        if (sg.slope > 0 && (!pos || sg.length > pos->length)) pos = &sg;
        if (sg.slope < 0 && (!neg || sg.length > neg->length)) neg = &sg;
    }
    ASSERT_TRUE(pos && neg);
    // The edges are about 7 px/px steep, where one degree of angle
    // resolution moves the slope by about 13%. Allow a few bins raw;
    // refinement tightens them.
    EXPECT_NEAR(pos->slope / want.positive, 1.0, 0.4);
    EXPECT_NEAR(neg->slope / want.negative, 1.0, 0.4);

    auto refined = refine_segments(remove_drift(m), segs);
    pos = neg = nullptr;
    for (const auto &sg : refined) {
        if (sg.slope > 0 && (!pos || sg.length > pos->length)) pos = &sg;
        if (sg.slope < 0 && (!neg || sg.length > neg->length)) neg = &sg;
    }
    ASSERT_TRUE(pos && neg);
    EXPECT_NEAR(pos->slope / want.positive, 1.0, 0.05);
    EXPECT_NEAR(neg->slope / want.negative, 1.0, 0.05);
}

TEST(Hough, SlopesInvariantUnderValueRescaling) {
    SimDeviceSpec s;
    s.dot = {0.40, 0.7, 0.05, std::nullopt, std::nullopt};
    auto m = synth_map(s, default_vg_axis(), default_vds_axis(), 1);
    auto scaled = m;
    for (double &v : scaled.values()) v *= 37.0;
    auto a = hough_segments(canny(clahe(remove_drift(m))));
    auto b = hough_segments(canny(clahe(remove_drift(scaled))));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].slope, b[i].slope, 1e-9);
}

// ---------------------------------------------------------------------------
// find_peaks

TEST(FindPeaks, FlatTraceHasNone) {
    std::vector<double> t(100, 0.3);
    EXPECT_TRUE(find_peak_indices(t, 0.01).empty());
}

TEST(FindPeaks, TwoCoshPeaks) {
    Axis vg = default_vg_axis();
    std::vector<double> t(vg.count);
    for (std::size_t i = 0; i < vg.count; ++i) {
        double x = vg.at(i);
        t[i] = std::pow(std::cosh((x - 0.387) / 0.0015), -2) + std::pow(std::cosh((x - 0.412) / 0.0015), -2);
    }
    auto p = find_peaks(t, vg, 0.2);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NEAR(p[0], 0.387, vg.step());
    EXPECT_NEAR(p[1], 0.412, vg.step());
}

TEST(FindPeaks, RippleBelowProminenceIgnored) {
    Axis vg = default_vg_axis();
    const double min_prom = 0.2;
    std::vector<double> t(vg.count);
    for (std::size_t i = 0; i < vg.count; ++i) {
        double x = vg.at(i);
        t[i] = std::pow(std::cosh((x - 0.4) / 0.002), -2) + 0.5 * min_prom * 0.5 * (1 + std::sin(x / 0.004));
    }
    auto p = find_peaks(t, vg, min_prom);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NEAR(p[0], 0.4, 2 * vg.step());
}

TEST(FindPeaks, ProminenceMatchesDefinition) {
    std::vector<double> t = {0, 3, 1, 5, 0, 2, 0};
    EXPECT_DOUBLE_EQ(peak_prominence(t, 1), 2.0);
    EXPECT_DOUBLE_EQ(peak_prominence(t, 3), 5.0);
    EXPECT_DOUBLE_EQ(peak_prominence(t, 5), 2.0);
    auto idx = find_peak_indices(t, 2.5);
    ASSERT_EQ(idx.size(), 1u);
    EXPECT_EQ(idx[0], 3u);
}

TEST(FindPeaks, PlateauReportsMiddle) {
    std::vector<double> t = {0, 1, 1, 1, 0};
    auto idx = find_peak_indices(t, 0.5);
    ASSERT_EQ(idx.size(), 1u);
    EXPECT_EQ(idx[0], 2u);
}

}  // namespace
}  // namespace qdfarm
