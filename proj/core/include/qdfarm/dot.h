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

#ifndef QDFARM_DOT_H
#define QDFARM_DOT_H

#include <optional>
#include <string>
#include <string_view>

namespace qdfarm {

/// Elementary charge in coulomb (exact SI value).
inline constexpr double kElementaryCharge = 1.602176634e-19;

/// Single-dot parameters recoverable from the first Coulomb diamond.
struct DotParameters {
    double v_1e = 0.0;       ///< First-electron loading voltage, V.
    double alpha_g = 0.0;    ///< Gate lever arm, dimensionless.
    double asymmetry = 0.0;  ///< Drain minus source lever arm, dimensionless.
    std::optional<double> v_2e;             ///< Second loading voltage, V.
    std::optional<double> charging_energy;  ///< meV.

    /// Returns an empty string when the parameters satisfy the lever-arm
    /// invariants, otherwise a short reason.
    std::string invariant_violation() const;
    /// Throws std::invalid_argument when invariant_violation() is non-empty.
    void validate() const;

    bool operator==(const DotParameters &) const = default;
};

enum class DeviceClass { Good, Bad, Multi };

std::string_view to_string(DeviceClass c);
DeviceClass parse_device_class(std::string_view text);

}  // namespace qdfarm

#endif  // QDFARM_DOT_H
