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

#include "qdfarm/mux.h"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdfarm {

namespace {

void check_address(int row, int col) {
    if (row < 0 || row >= kFarmSide || col < 0 || col >= kFarmSide) {
        throw std::out_of_range("mux address out of range: (" + std::to_string(row) + ", " + std::to_string(col) +
                                ")");
    }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

OneHot decode_address(int row, int col) {
    check_address(row, col);
    OneHot word;
    word.set(static_cast<std::size_t>(row * kFarmSide + col));
    return word;
}

OneHot MuxState::open_gates() const {
    return powered ? decode_address(row_address, col_address) : OneHot{};
}

void Multiplexer::power(bool on) {
    std::lock_guard lock(mutex_);
    state_.powered = on;
}

void Multiplexer::select(int row, int col) {
    check_address(row, col);
    std::lock_guard lock(mutex_);
    state_.row_address = row;
    state_.col_address = col;
}

void Multiplexer::set_back_gates(double v_nw, double v_pw) {
    std::lock_guard lock(mutex_);
    state_.v_nw = v_nw;
    state_.v_pw = v_pw;
}

MuxState Multiplexer::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

double r_on(double v_nw, double v_pw, double common_mode, const RonModel &m) {
    const double drive = 0.5 * (v_nw - v_pw);
    const double s = logistic((m.midpoint - drive) / m.width);
    const double s0 = logistic(m.midpoint / m.width);
    const double cm = common_mode - m.reference_common_mode;
    return (m.r_saturated + (m.r_zero_bias - m.r_saturated) * s / s0) * (1.0 + m.common_mode_gain * cm * cm);
}

double effective_snr(double base_snr, double r_on_ohm, const RonModel &m) {
    if (!(base_snr >= 0.0)) {
        throw std::invalid_argument("effective_snr: base SNR must be non-negative");
    }
    if (std::isinf(r_on_ohm)) return 0.0;
    return base_snr * m.r_saturated / std::max(r_on_ohm, m.r_saturated);
}

ScanPlan uniform_scan_plan(std::int64_t points, std::int64_t tau_ps, std::int64_t averages, std::int64_t settle_ps) {
    ScanPlan plan;
    plan.reserve(kFarmCells);
    for (int i = 0; i < kFarmCells; ++i) {
        plan.push_back({device_name(i), points, tau_ps, averages, settle_ps});
    }
    return plan;
}

ScanPlan default_scan_plan() { return uniform_scan_plan(256 * 128, 8'750'000, 1, 6'248'750'000); }

ScanReport scan_time(std::span<const ScanEntry> plan, std::optional<std::int64_t> budget_ps) {
    if (plan.empty()) {
        throw std::invalid_argument("scan plan is empty");
    }
    if (plan.size() != static_cast<std::size_t>(kFarmCells)) {
        throw std::invalid_argument("scan plan covers " + std::to_string(plan.size()) + " devices, expected " +
                                    std::to_string(kFarmCells));
    }
    OneHot seen;
    ScanReport report;
    report.per_device_ps.reserve(plan.size());
    for (const auto &e : plan) {
        int index = parse_device_name(e.device_id);
        if (seen.test(static_cast<std::size_t>(index))) {
            throw std::invalid_argument("device " + e.device_id + " appears twice in the scan plan");
        }
        seen.set(static_cast<std::size_t>(index));
        if (e.points < 1 || e.tau_ps < 1 || e.averages < 1 || e.settle_ps < 0) {
            throw std::invalid_argument("device " + e.device_id + ": counts and times must be positive");
        }
        std::int64_t t = e.time_ps();
        report.per_device_ps.push_back(t);
        report.total_ps += t;
    }
    report.budget_ps = budget_ps;
    report.over_budget = budget_ps && report.total_ps > *budget_ps;
    return report;
}

std::int64_t parse_seconds_ps(std::string_view text) {
    auto bad = [&] { return std::invalid_argument("invalid time in seconds: '" + std::string(text) + "'"); };
    std::size_t dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if ((whole.empty() && frac.empty()) || frac.size() > 12) throw bad();
    std::int64_t w = 0;
    if (!whole.empty()) {
        auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
        if (ec != std::errc{} || p != whole.data() + whole.size() || w < 0 || whole.front() == '-') throw bad();
    }
    std::int64_t f = 0;
    for (char ch : frac) {
        if (ch < '0' || ch > '9') throw bad();
        f = f * 10 + (ch - '0');
    }
    for (std::size_t k = frac.size(); k < 12; ++k) f *= 10;
    if (w > std::numeric_limits<std::int64_t>::max() / 1'000'000'000'000LL - 1) throw bad();
    return w * 1'000'000'000'000LL + f;
}

std::string format_seconds(std::int64_t ps) {
    std::string s = std::to_string(ps / 1'000'000'000'000LL);
    std::int64_t frac = ps % 1'000'000'000'000LL;
    if (frac == 0) return s;
    std::string digits = std::to_string(frac);
    digits.insert(0, 12 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    return s + "." + digits;
}

}  // namespace qdfarm
