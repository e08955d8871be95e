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

#include "qdfarm/map.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdfarm {

double Axis::at(std::size_t i) const {
    if (count < 2) {
        return min;
    }
    // Interpolate from both ends so that at(count - 1) == max exactly.
    double t = static_cast<double>(i) / static_cast<double>(count - 1);
    return min + (max - min) * t;
}

double Axis::step() const {
    return count < 2 ? 0.0 : (max - min) / static_cast<double>(count - 1);
}

double Axis::index_of(double v) const {
    return (v - min) / step();
}

std::size_t Axis::nearest(double v) const {
    double idx = std::round(index_of(v));
    if (!(idx > 0.0)) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(idx), count - 1);
}

void Axis::validate(std::string_view name) const {
    if (count < 2) {
        throw std::invalid_argument(std::string(name) + " axis needs at least 2 samples");
    }
    if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
        throw std::invalid_argument(std::string(name) + " axis must be strictly increasing");
    }
}

std::string_view to_string(MapMode mode) {
    switch (mode) {
        case MapMode::Rf:
            return "rf";
        case MapMode::DcCurrent:
            return "dc_current";
        case MapMode::DcDerivative:
            return "dc_derivative";
    }
    return "rf";
}

MapMode parse_map_mode(std::string_view text) {
    if (text == "rf") return MapMode::Rf;
    if (text == "dc_current") return MapMode::DcCurrent;
    if (text == "dc_derivative") return MapMode::DcDerivative;
    throw std::invalid_argument("unknown map mode '" + std::string(text) + "'");
}

ChargeStabilityMap::ChargeStabilityMap(std::string device_id, MapMode mode, Axis vg, Axis vds)
    : device_id_(std::move(device_id)), mode_(mode), vg_(vg), vds_(vds) {
    vg_.validate("vg");
    vds_.validate("vds");
    values_.assign(vg_.count * vds_.count, 0.0);
}

ChargeStabilityMap::ChargeStabilityMap(std::string device_id, MapMode mode, Axis vg, Axis vds,
                                       std::vector<double> values)
    : device_id_(std::move(device_id)), mode_(mode), vg_(vg), vds_(vds), values_(std::move(values)) {
    vg_.validate("vg");
    vds_.validate("vds");
    if (values_.size() != vg_.count * vds_.count) {
        throw std::invalid_argument("map value count does not match axis counts");
    }
}

std::size_t ChargeStabilityMap::zero_bias_row() const {
    std::size_t best = 0;
    double best_dist = std::abs(vds_.at(0));
    for (std::size_t r = 1; r < vds_.count; ++r) {
        double d = std::abs(vds_.at(r));
        if (d < best_dist) {
            best = r;
            best_dist = d;
        }
    }
    return best;
}

}  // namespace qdfarm
