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

#ifndef QDFARM_LAYOUT_H
#define QDFARM_LAYOUT_H

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qdfarm/dot.h"

namespace qdfarm {

inline constexpr int kFarmSide = 32;
inline constexpr int kFarmCells = kFarmSide * kFarmSide;

struct GridPos {
    int row = 0;
    int col = 0;
    bool operator==(const GridPos &) const = default;
};

struct LayoutCell {
    int set_id = -1;
    int device_index = -1;
    bool operator==(const LayoutCell &) const = default;
};

/// Placement of 1024 devices on the 32x32 farm grid.
///
/// Devices are numbered set-major: set 0 owns indices [0, size_0), set 1 the
/// next size_1 indices, and so on.
class FarmLayout {
   public:
    /// `cells` is row-major over the grid. Throws std::invalid_argument unless
    /// every cell and every device index is used exactly once and the set ids
    /// agree with the set-major device numbering.
    FarmLayout(std::vector<LayoutCell> cells, std::vector<int> set_sizes);

    const LayoutCell &at(int row, int col) const { return cells_[row * kFarmSide + col]; }
    const LayoutCell &at(GridPos p) const { return at(p.row, p.col); }
    GridPos position_of(int device_index) const { return positions_.at(device_index); }
    int set_of(int device_index) const;

    int set_count() const { return static_cast<int>(set_sizes_.size()); }
    int set_size(int set_id) const { return set_sizes_.at(set_id); }
    int set_offset(int set_id) const { return set_offsets_.at(set_id); }
    std::span<const int> set_sizes() const { return set_sizes_; }
    std::span<const LayoutCell> cells() const { return cells_; }

    bool operator==(const FarmLayout &other) const { return cells_ == other.cells_ && set_sizes_ == other.set_sizes_; }

   private:
    std::vector<LayoutCell> cells_;
    std::vector<int> set_sizes_;
    std::vector<int> set_offsets_;
    std::vector<GridPos> positions_;
};

/// "D0042" style identifier for a device index.
std::string device_name(int device_index);
/// Inverse of device_name; throws std::invalid_argument on malformed ids and
/// indices outside the farm.
int parse_device_name(const std::string &name);

/// Default instance-set sizes: 8 sets of 128 (4 gate lengths x 2 widths).
std::vector<int> default_set_sizes();

/// Common-centroid randomized placement built from mirrored cell pairs
/// (r, c) / (31 - r, 31 - c). Throws std::invalid_argument if the sizes do not
/// sum to 1024 or any size is odd or non-positive.
FarmLayout place_farm(std::span<const int> set_sizes, std::uint64_t seed);

struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

/// Mean occupied (row, col) of a set. Throws std::out_of_range for unknown sets.
Centroid centroid(const FarmLayout &layout, int set_id);

struct ClassUniformity {
    DeviceClass device_class = DeviceClass::Good;
    int count = 0;
    std::array<int, kFarmSide> row_histogram{};
    std::array<int, kFarmSide> col_histogram{};
    std::vector<int> set_histogram;
    double row_kld = 0.0;
    double col_kld = 0.0;
    double set_kld = 0.0;
};

struct UniformityReport {
    std::vector<ClassUniformity> classes;  ///< Only classes with at least one device.
    double mean_rowcol_kld = 0.0;
    double std_rowcol_kld = 0.0;
    double mean_set_kld = 0.0;
};

/// Per-class row, column and instance-set histograms with their KL divergence
/// from uniform.
UniformityReport uniformity(const FarmLayout &layout, const std::function<DeviceClass(int)> &class_of);

}  // namespace qdfarm

#endif  // QDFARM_LAYOUT_H
