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
#include <random>
#include <set>
#include <thread>

#include "qdfarm/mux.h"

namespace qdfarm {
namespace {

TEST(DecodeAddress, OneHotAndBijective) {
    std::set<std::size_t> seen;
    for (int r = 0; r < kFarmSide; ++r) {
        for (int c = 0; c < kFarmSide; ++c) {
            OneHot w = decode_address(r, c);
            ASSERT_EQ(w.count(), 1u);
            ASSERT_TRUE(w.test(static_cast<std::size_t>(32 * r + c)));
            seen.insert(static_cast<std::size_t>(32 * r + c));
        }
    }
    EXPECT_EQ(seen.size(), 1024u);
}

TEST(DecodeAddress, OutOfRange) {
    EXPECT_THROW(decode_address(-1, 0), std::out_of_range);
    EXPECT_THROW(decode_address(0, 32), std::out_of_range);
    EXPECT_THROW(decode_address(32, 0), std::out_of_range);
}

TEST(Multiplexer, UnpoweredGroundsEverything) {
    Multiplexer mux;
    mux.select(5, 7);
    auto s = mux.snapshot();
    EXPECT_EQ(s.open_gates().count(), 0u);
    EXPECT_EQ(s.grounded().count(), 1024u);
}

TEST(Multiplexer, PoweredOpensAddressedDeviceOnly) {
    Multiplexer mux;
    mux.power(true);
    mux.select(300);
    auto s = mux.snapshot();
    EXPECT_EQ(s.row_address, 9);
    EXPECT_EQ(s.col_address, 12);
    EXPECT_EQ(s.open_gates().count(), 1u);
    EXPECT_TRUE(s.open_gates().test(300));
    EXPECT_EQ(s.grounded().count(), 1023u);
    EXPECT_FALSE(s.grounded().test(300));
    EXPECT_THROW(mux.select(1024), std::out_of_range);
    EXPECT_EQ(mux.snapshot().row_address, 9);
}

TEST(Multiplexer, ConcurrentSelectsLeaveConsistentState) {
    Multiplexer mux;
    mux.power(true);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&mux, t] {
            for (int i = 0; i < 2000; ++i) {
                mux.select(t, t);
                auto s = mux.snapshot();
                ASSERT_EQ(s.row_address, s.col_address);
            }
        });
    }
    for (auto &th : threads) th.join();
    EXPECT_EQ(mux.snapshot().open_gates().count(), 1u);
}

TEST(Ron, ReferencePoints) {
    RonModel m;
    EXPECT_NEAR(r_on(0.0, 0.0, 0.4), 40e3, 1e-6);
    // Strong back bias saturates near r_saturated.
    EXPECT_NEAR(r_on(2.0, -2.0, 0.4), 2e3, 20.0);
    // Off the reference common mode the resistance grows quadratically.
    EXPECT_NEAR(r_on(0.0, 0.0, 0.9), 40e3 * 1.5, 1e-6);
    EXPECT_DOUBLE_EQ(r_on(0.0, 0.0, -0.1), r_on(0.0, 0.0, 0.9));
}

TEST(Ron, MonotoneInBackBias) {
    double prev = r_on(0.0, 0.0, 0.4);
    for (double v = 0.1; v <= 3.0; v += 0.1) {
        double r = r_on(v, -v, 0.4);
        EXPECT_LT(r, prev) << v;
        EXPECT_GT(r, 2e3);
        prev = r;
    }
}

TEST(EffectiveSnr, ScalesWithResistance) {
    EXPECT_DOUBLE_EQ(effective_snr(10.0, 2e3), 10.0);
    EXPECT_DOUBLE_EQ(effective_snr(10.0, 500.0), 10.0);
    EXPECT_DOUBLE_EQ(effective_snr(10.0, 40e3), 0.5);
    EXPECT_LT(effective_snr(10.0, 20e3), 10.0);
    EXPECT_DOUBLE_EQ(effective_snr(10.0, std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_THROW(effective_snr(-1.0, 2e3), std::invalid_argument);
}

TEST(ScanTime, DefaultPlanIsFiveMinutes) {
    auto plan = default_scan_plan();
    ASSERT_EQ(plan.size(), 1024u);
    auto r = scan_time(plan, parse_seconds_ps("300"));
    EXPECT_EQ(r.total_ps, 300'000'000'000'000LL);
    EXPECT_FALSE(r.over_budget);
    EXPECT_EQ(r.per_device_ps.front(), 292'968'750'000LL);
    EXPECT_EQ(format_seconds(r.total_ps), "300");
    auto tight = scan_time(plan, r.total_ps - 1);
    EXPECT_TRUE(tight.over_budget);
}

TEST(ScanTime, RoundedPlanIsJustOverFiveMinutes) {
    // 286 ms of points plus 7 ms settling: 1024 x 293 ms.
    auto r = scan_time(uniform_scan_plan(286'000, 1'000'000, 1, 7'000'000'000));
    EXPECT_EQ(format_seconds(r.total_ps), "300.032");
    EXPECT_TRUE(scan_time(uniform_scan_plan(286'000, 1'000'000, 1, 7'000'000'000), 300'000'000'000'000LL).over_budget);
}

TEST(ScanTime, FastUniformPlan) {
    // 8192 points at 1 us plus 10 ms settling, 1024 devices.
    auto r = scan_time(uniform_scan_plan(8192, 1'000'000, 1, 10'000'000'000));
    EXPECT_EQ(r.total_ps, 1024LL * (8192LL * 1'000'000 + 10'000'000'000));
    EXPECT_NEAR(r.total_seconds(), 18.628608, 1e-9);
}

TEST(ScanTime, PermutationInvariantTotal) {
    auto plan = uniform_scan_plan(100, 3'000'000, 2, 0);
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < plan.size(); ++i) plan[i].points += static_cast<std::int64_t>(i % 17);
    auto base = scan_time(plan).total_ps;
    std::shuffle(plan.begin(), plan.end(), rng);
    EXPECT_EQ(scan_time(plan).total_ps, base);
}

TEST(ScanTime, RejectsBadPlans) {
    EXPECT_THROW(scan_time(ScanPlan{}), std::invalid_argument);
    auto plan = default_scan_plan();
    plan[5].device_id = plan[6].device_id;
    EXPECT_THROW(scan_time(plan), std::invalid_argument);
    plan = default_scan_plan();
    plan.pop_back();
    EXPECT_THROW(scan_time(plan), std::invalid_argument);
    plan = default_scan_plan();
    plan[0].points = 0;
    EXPECT_THROW(scan_time(plan), std::invalid_argument);
    plan = default_scan_plan();
    plan[0].device_id = "nonsense";
    EXPECT_THROW(scan_time(plan), std::invalid_argument);
}

TEST(ParseSeconds, ExactDecimal) {
    EXPECT_EQ(parse_seconds_ps("0.000008750"), 8'750'000);
    EXPECT_EQ(parse_seconds_ps("1"), 1'000'000'000'000LL);
    EXPECT_EQ(parse_seconds_ps(".5"), 500'000'000'000LL);
    EXPECT_EQ(parse_seconds_ps("0.000000000001"), 1);
    EXPECT_EQ(format_seconds(parse_seconds_ps("0.00624875")), "0.00624875");
    for (const char *bad : {"", ".", "-1", "1e-3", "0.0000000000001", "abc", "1.2.3"}) {
        EXPECT_THROW(parse_seconds_ps(bad), std::invalid_argument) << bad;
    }
}

}  // namespace
}  // namespace qdfarm
