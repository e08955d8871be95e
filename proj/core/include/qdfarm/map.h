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

#ifndef QDFARM_MAP_H
#define QDFARM_MAP_H

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qdfarm {

/// A uniformly sampled voltage axis: `count` samples from `min` to `max` inclusive.
struct Axis {
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;

    double at(std::size_t i) const;
    /// Sample spacing (max - min) / (count - 1).
    double step() const;
    /// Index of the sample closest to `v`, clamped to the axis.
    std::size_t nearest(double v) const;
    /// Fractional index of `v` (may lie outside [0, count - 1]).
    double index_of(double v) const;
    double span() const { return max - min; }

    /// Throws std::invalid_argument unless count >= 2 and min < max.
    void validate(std::string_view name) const;

    bool operator==(const Axis &other) const = default;
};

enum class MapMode { Rf, DcCurrent, DcDerivative };

std::string_view to_string(MapMode mode);
MapMode parse_map_mode(std::string_view text);

/// Device response over the (V_GS, V_DS) plane.
///
/// Storage is row-major with one row per V_DS sample (rows ordered from
/// vds.min to vds.max) and one column per V_GS sample.
class ChargeStabilityMap {
   public:
    ChargeStabilityMap() = default;
    /// Zero-filled map. Validates both axes.
    ChargeStabilityMap(std::string device_id, MapMode mode, Axis vg, Axis vds);
    ChargeStabilityMap(std::string device_id, MapMode mode, Axis vg, Axis vds, std::vector<double> values);

    const std::string &device_id() const { return device_id_; }
    void set_device_id(std::string id) { device_id_ = std::move(id); }
    MapMode mode() const { return mode_; }
    void set_mode(MapMode mode) { mode_ = mode; }
    const Axis &vg() const { return vg_; }
    const Axis &vds() const { return vds_; }

    std::size_t rows() const { return vds_.count; }
    std::size_t cols() const { return vg_.count; }
    std::size_t size() const { return values_.size(); }

    double &at(std::size_t row, std::size_t col) { return values_[row * vg_.count + col]; }
    double at(std::size_t row, std::size_t col) const { return values_[row * vg_.count + col]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * vg_.count, vg_.count}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * vg_.count, vg_.count}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Index of the V_DS row nearest zero bias (lower index on ties).
    std::size_t zero_bias_row() const;

    /// True when the V_DS axis contains zero within its range.
    bool spans_zero_bias() const { return vds_.min < 0.0 && vds_.max > 0.0; }

    bool operator==(const ChargeStabilityMap &other) const = default;

   private:
    std::string device_id_;
    MapMode mode_ = MapMode::Rf;
    Axis vg_;
    Axis vds_;
    std::vector<double> values_;
};

}  // namespace qdfarm

#endif  // QDFARM_MAP_H
