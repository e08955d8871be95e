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

#include "qdfarm/layout.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qdfarm/stats.h"

namespace qdfarm {

FarmLayout::FarmLayout(std::vector<LayoutCell> cells, std::vector<int> set_sizes)
    : cells_(std::move(cells)), set_sizes_(std::move(set_sizes)) {
    if (cells_.size() != static_cast<std::size_t>(kFarmCells)) {
        throw std::invalid_argument("layout must have exactly 1024 cells");
    }
    int total = 0;
    for (int s : set_sizes_) {
        if (s <= 0) {
            throw std::invalid_argument("instance set sizes must be positive");
        }
        set_offsets_.push_back(total);
        total += s;
    }
    if (total != kFarmCells) {
        throw std::invalid_argument("instance set sizes must sum to 1024");
    }
    positions_.assign(kFarmCells, GridPos{-1, -1});
    for (int i = 0; i < kFarmCells; ++i) {
        const auto &cell = cells_[i];
        if (cell.device_index < 0 || cell.device_index >= kFarmCells) {
            throw std::invalid_argument("device index out of range in layout");
        }
        if (positions_[cell.device_index].row >= 0) {
            throw std::invalid_argument("device " + device_name(cell.device_index) + " placed twice");
        }
        if (cell.set_id != set_of(cell.device_index)) {
            throw std::invalid_argument("set id does not match device numbering for " +
                                        device_name(cell.device_index));
        }
        positions_[cell.device_index] = GridPos{i / kFarmSide, i % kFarmSide};
    }
}

int FarmLayout::set_of(int device_index) const {
    auto it = std::upper_bound(set_offsets_.begin(), set_offsets_.end(), device_index);
    return static_cast<int>(it - set_offsets_.begin()) - 1;
}

std::string device_name(int device_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "D%04d", device_index);
    return buf;
}

int parse_device_name(const std::string &name) {
    int value = -1;
    if (name.size() != 5 || name[0] != 'D') {
        throw std::invalid_argument("malformed device id '" + name + "'");
    }
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), value);
    if (ec != std::errc() || ptr != name.data() + name.size() || value < 0 || value >= kFarmCells) {
        throw std::invalid_argument("malformed device id '" + name + "'");
    }
    return value;
}

std::vector<int> default_set_sizes() { return std::vector<int>(8, 128); }

FarmLayout place_farm(std::span<const int> set_sizes, std::uint64_t seed) {
    int total = 0;
    for (int s : set_sizes) {
        if (s <= 0) {
            throw std::invalid_argument("instance set sizes must be positive");
        }
        if (s % 2 != 0) {
            throw std::invalid_argument("instance set size " + std::to_string(s) +
                                        " is odd; mirrored placement needs even sizes");
        }
        total += s;
    }
    if (total != kFarmCells) {
        throw std::invalid_argument("instance set sizes must sum to 1024");
    }

    // Each cell in the upper half of the grid (row-major index < 512) has a
    // distinct point-mirror partner in the lower half.
    std::vector<int> pair_heads(kFarmCells / 2);
    std::iota(pair_heads.begin(), pair_heads.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(pair_heads.begin(), pair_heads.end(), rng);

    std::vector<LayoutCell> cells(kFarmCells);
    std::size_t next_pair = 0;
    int device = 0;
    for (int set_id = 0; set_id < static_cast<int>(set_sizes.size()); ++set_id) {
        for (int k = 0; k < set_sizes[set_id] / 2; ++k) {
            int head = pair_heads[next_pair++];
            int r = head / kFarmSide;
            int c = head % kFarmSide;
            int mirror = (kFarmSide - 1 - r) * kFarmSide + (kFarmSide - 1 - c);
            cells[head] = LayoutCell{set_id, device++};
            cells[mirror] = LayoutCell{set_id, device++};
        }
    }
    return FarmLayout(std::move(cells), std::vector<int>(set_sizes.begin(), set_sizes.end()));
}

Centroid centroid(const FarmLayout &layout, int set_id) {
    if (set_id < 0 || set_id >= layout.set_count()) {
        throw std::out_of_range("unknown instance set " + std::to_string(set_id));
    }
    // Integer sums keep the mean exact.
    long row_sum = 0;
    long col_sum = 0;
    int n = layout.set_size(set_id);
    for (int k = 0; k < n; ++k) {
        GridPos p = layout.position_of(layout.set_offset(set_id) + k);
        row_sum += p.row;
        col_sum += p.col;
    }
    return {static_cast<double>(row_sum) / n, static_cast<double>(col_sum) / n};
}

UniformityReport uniformity(const FarmLayout &layout, const std::function<DeviceClass(int)> &class_of) {
    constexpr std::array all_classes{DeviceClass::Good, DeviceClass::Bad, DeviceClass::Multi};
    UniformityReport report;
    std::vector<double> rowcol;
    double set_sum = 0.0;
    for (DeviceClass cls : all_classes) {
        ClassUniformity u;
        u.device_class = cls;
        u.set_histogram.assign(layout.set_count(), 0);
        for (int d = 0; d < kFarmCells; ++d) {
            if (class_of(d) != cls) {
                continue;
            }
            GridPos p = layout.position_of(d);
            ++u.count;
            ++u.row_histogram[p.row];
            ++u.col_histogram[p.col];
            ++u.set_histogram[layout.set_of(d)];
        }
        if (u.count == 0) {
            continue;
        }
        u.row_kld = kld_uniform(std::span<const int>(u.row_histogram));
        u.col_kld = kld_uniform(std::span<const int>(u.col_histogram));
        u.set_kld = kld_uniform(std::span<const int>(u.set_histogram));
        rowcol.push_back(u.row_kld);
        rowcol.push_back(u.col_kld);
        set_sum += u.set_kld;
        report.classes.push_back(std::move(u));
    }
    if (!report.classes.empty()) {
        auto d = describe(rowcol);
        report.mean_rowcol_kld = d.mean;
        report.std_rowcol_kld = d.std;
        report.mean_set_kld = set_sum / static_cast<double>(report.classes.size());
    }
    return report;
}

}  // namespace qdfarm
