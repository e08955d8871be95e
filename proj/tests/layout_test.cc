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

#include <cmath>
#include <random>
#include <set>

#include "qdfarm/layout.h"

namespace qdfarm {
namespace {

TEST(PlaceFarm, CentroidsAtGridCenterForManySeeds) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto layout = place_farm(default_set_sizes(), seed);
        for (int s = 0; s < layout.set_count(); ++s) {
            Centroid c = centroid(layout, s);
            EXPECT_NEAR(c.row, 15.5, 1e-12) << "seed " << seed << " set " << s;
            EXPECT_NEAR(c.col, 15.5, 1e-12) << "seed " << seed << " set " << s;
        }
    }
}

TEST(PlaceFarm, MirroredCellsShareASet) {
    auto layout = place_farm(default_set_sizes(), 9);
    for (int r = 0; r < kFarmSide; ++r) {
        for (int c = 0; c < kFarmSide; ++c) {
            EXPECT_EQ(layout.at(r, c).set_id, layout.at(31 - r, 31 - c).set_id);
        }
    }
}

TEST(PlaceFarm, BijectionAndSetMajorNumbering) {
    auto layout = place_farm(std::vector<int>{512, 256, 254, 2}, 1);
    std::set<int> seen;
    for (const auto &cell : layout.cells()) {
        seen.insert(cell.device_index);
        EXPECT_EQ(layout.set_of(cell.device_index), cell.set_id);
        GridPos p = layout.position_of(cell.device_index);
        EXPECT_EQ(layout.at(p).device_index, cell.device_index);
    }
    EXPECT_EQ(seen.size(), 1024u);
    EXPECT_EQ(layout.set_offset(3), 1022);
}

TEST(PlaceFarm, SeedChangesPlacement) {
    EXPECT_EQ(place_farm(default_set_sizes(), 1), place_farm(default_set_sizes(), 1));
    EXPECT_FALSE(place_farm(default_set_sizes(), 1) == place_farm(default_set_sizes(), 2));
}

TEST(PlaceFarm, RejectsBadSizes) {
    EXPECT_THROW(place_farm(std::vector<int>{1023, 1}, 1), std::invalid_argument);
    EXPECT_THROW(place_farm(std::vector<int>{512, 510}, 1), std::invalid_argument);
    EXPECT_THROW(place_farm(std::vector<int>{1024, 0}, 1), std::invalid_argument);
    EXPECT_THROW(centroid(place_farm(default_set_sizes(), 1), 8), std::out_of_range);
}

TEST(DeviceName, RoundTrip) {
    EXPECT_EQ(device_name(42), "D0042");
    EXPECT_EQ(parse_device_name("D1023"), 1023);
    EXPECT_THROW(parse_device_name("D1024"), std::invalid_argument);
    EXPECT_THROW(parse_device_name("X0001"), std::invalid_argument);
    EXPECT_THROW(parse_device_name("D12"), std::invalid_argument);
}

TEST(FarmLayout, RejectsInconsistentCells) {
    auto layout = place_farm(default_set_sizes(), 2);
    std::vector<LayoutCell> cells(layout.cells().begin(), layout.cells().end());
    std::vector<int> sizes(layout.set_sizes().begin(), layout.set_sizes().end());
    std::swap(cells[0].set_id, cells[1].set_id);
    if (cells[0].set_id != cells[1].set_id) EXPECT_THROW(FarmLayout(cells, sizes), std::invalid_argument);
    cells = {layout.cells().begin(), layout.cells().end()};
    cells[1].device_index = cells[0].device_index;
    EXPECT_THROW(FarmLayout(cells, sizes), std::invalid_argument);
}

TEST(Uniformity, RandomClassesBeatClusteredOnes) {
    auto layout = place_farm(default_set_sizes(), 6);
    std::mt19937_64 rng(6);
    std::vector<DeviceClass> random_class(kFarmCells);
    for (auto &c : random_class) c = static_cast<DeviceClass>(rng() % 3);
    auto scattered = uniformity(layout, [&](int i) { return random_class[i]; });
    // Clustered: class set by grid row band.
    auto clustered = uniformity(layout, [&](int i) {
        int row = layout.position_of(i).row;
        return row < 11 ? DeviceClass::Good : row < 22 ? DeviceClass::Bad : DeviceClass::Multi;
    });
    ASSERT_EQ(scattered.classes.size(), 3u);
    EXPECT_GT(clustered.mean_rowcol_kld, 5 * scattered.mean_rowcol_kld);
    int total = 0;
    for (const auto &c : scattered.classes) {
        total += c.count;
        int rows = 0;
        for (int h : c.row_histogram) rows += h;
        EXPECT_EQ(rows, c.count);
        EXPECT_EQ(c.set_histogram.size(), 8u);
    }
    EXPECT_EQ(total, kFarmCells);
}

TEST(Uniformity, SetCorrelatedClassesShowInSetHistogram) {
    // Placement scatters each set over the grid, so a class tied to the set
    // is visible by type but nearly flat by row and column.
    auto layout = place_farm(default_set_sizes(), 12);
    auto r = uniformity(layout, [&](int i) { return layout.set_of(i) < 4 ? DeviceClass::Good : DeviceClass::Bad; });
    ASSERT_EQ(r.classes.size(), 2u);
    for (const auto &c : r.classes) EXPECT_NEAR(c.set_kld, std::log(2.0), 1e-12);
    EXPECT_GT(r.mean_set_kld, 5 * r.mean_rowcol_kld);
}

TEST(Uniformity, SkipsEmptyClasses) {
    auto layout = place_farm(default_set_sizes(), 1);
    auto r = uniformity(layout, [](int) { return DeviceClass::Good; });
    ASSERT_EQ(r.classes.size(), 1u);
    EXPECT_NEAR(r.classes[0].row_kld, 0.0, 1e-12);
    EXPECT_NEAR(r.classes[0].set_kld, 0.0, 1e-12);
}

}  // namespace
}  // namespace qdfarm
