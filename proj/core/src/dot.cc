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

#include "qdfarm/dot.h"

#include <cmath>
#include <stdexcept>

namespace qdfarm {

std::string DotParameters::invariant_violation() const {
    if (!std::isfinite(alpha_g) || !std::isfinite(asymmetry) || !std::isfinite(v_1e)) {
        return "non-finite parameter";
    }
    if (!(alpha_g > 0.0) || alpha_g > 1.0) {
        return "alpha_g outside (0, 1]";
    }
    if (!(std::abs(asymmetry) < 1.0)) {
        return "asymmetry outside (-1, 1)";
    }
    // Lever arms sum to one, so |alpha_D - alpha_S| <= alpha_D + alpha_S = 1 - alpha_G.
    if (std::abs(asymmetry) + alpha_g > 1.0) {
        return "|asymmetry| + alpha_g exceeds 1";
    }
    if (v_2e && !(*v_2e > v_1e)) {
        return "v_2e must exceed v_1e";
    }
    return {};
}

void DotParameters::validate() const {
    auto reason = invariant_violation();
    if (!reason.empty()) {
        throw std::invalid_argument("invalid dot parameters: " + reason);
    }
}

std::string_view to_string(DeviceClass c) {
    switch (c) {
        case DeviceClass::Good:
            return "good";
        case DeviceClass::Bad:
            return "bad";
        case DeviceClass::Multi:
            return "multi";
    }
    return "bad";
}

DeviceClass parse_device_class(std::string_view text) {
    if (text == "good" || text == "Good") return DeviceClass::Good;
    if (text == "bad" || text == "Bad") return DeviceClass::Bad;
    if (text == "multi" || text == "Multi") return DeviceClass::Multi;
    throw std::invalid_argument("unknown device class '" + std::string(text) + "'");
}

}  // namespace qdfarm
