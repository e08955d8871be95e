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

#ifndef QDFARM_MUX_H
#define QDFARM_MUX_H

#include <bitset>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdfarm/layout.h"

namespace qdfarm {

using OneHot = std::bitset<kFarmCells>;

/// One-hot word with bit 32 * row + col set. Throws std::out_of_range for
/// addresses outside 0..31.
OneHot decode_address(int row, int col);

struct MuxState {
    int row_address = 0;
    int col_address = 0;
    double v_nw = 2.0;  ///< n-well back gate, V
    double v_pw = -2.0; ///< p-well back gate, V
    bool powered = false;

    /// Open transmission gates: exactly the addressed one when powered, none
    /// otherwise.
    OneHot open_gates() const;
    /// Devices tied to ground by their pull-down: all but the open one.
    OneHot grounded() const { return ~open_gates(); }
};

/// Thread-safe multiplexer: address changes are serialized and readers get
/// consistent snapshots.
class Multiplexer {
   public:
    void power(bool on);
    void select(int row, int col);
    void select(int device_index) { select(device_index / kFarmSide, device_index % kFarmSide); }
    void set_back_gates(double v_nw, double v_pw);
    MuxState snapshot() const;

   private:
    mutable std::mutex mutex_;
    MuxState state_;
};

/// Transmission-gate on-resistance model. The back-bias drive
/// v = (v_nw - v_pw) / 2 enters through a logistic turn-on.
struct RonModel {
    double r_saturated = 2e3;   ///< Ohm, strong back bias
    double r_zero_bias = 40e3;  ///< Ohm, v_nw = v_pw = 0 at the reference common mode
    double midpoint = 0.75;     ///< V
    double width = 0.15;        ///< V
    double reference_common_mode = 0.4;
    double common_mode_gain = 2.0;  ///< 1/V^2 in the multiplicative factor
};

/// r_sat + (r_zero - r_sat) s(v) / s(0), with s logistic in the back-bias
/// drive, times 1 + gain (cm - cm_ref)^2.
double r_on(double v_nw, double v_pw, double common_mode, const RonModel &model = {});

/// base_snr scaled by r_saturated / max(r_on, r_saturated).
double effective_snr(double base_snr, double r_on_ohm, const RonModel &model = {});

/// Times are integer picoseconds so totals are exact.
struct ScanEntry {
    std::string device_id;
    std::int64_t points = 0;
    std::int64_t tau_ps = 0;
    std::int64_t averages = 1;
    std::int64_t settle_ps = 0;

    std::int64_t time_ps() const { return points * tau_ps * averages + settle_ps; }
};

using ScanPlan = std::vector<ScanEntry>;

/// 32768 points (256 x 128) at 8.75 us plus 6.24875 ms settling per device:
/// 292.96875 ms each and exactly 300 s for the farm.
ScanPlan default_scan_plan();

/// Uniform plan over all 1024 devices.
ScanPlan uniform_scan_plan(std::int64_t points, std::int64_t tau_ps, std::int64_t averages, std::int64_t settle_ps);

struct ScanReport {
    std::int64_t total_ps = 0;
    std::vector<std::int64_t> per_device_ps;  ///< In plan order.
    std::optional<std::int64_t> budget_ps;
    bool over_budget = false;

    double total_seconds() const { return static_cast<double>(total_ps) * 1e-12; }
};

/// Sums the plan. Throws std::invalid_argument for an empty plan, duplicate
/// or unknown device ids, missing devices, or non-positive counts.
ScanReport scan_time(std::span<const ScanEntry> plan, std::optional<std::int64_t> budget_ps = std::nullopt);

/// Seconds (decimal text) to integer picoseconds, exactly. Throws
/// std::invalid_argument for malformed or negative values and for more than
/// 12 fractional digits.
std::int64_t parse_seconds_ps(std::string_view text);
std::string format_seconds(std::int64_t ps);

}  // namespace qdfarm

#endif  // QDFARM_MUX_H
