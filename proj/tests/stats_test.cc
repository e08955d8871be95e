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

#include "qdfarm/sim.h"
#include "qdfarm/stats.h"

namespace qdfarm {
namespace {

TEST(Describe, KnownValues) {
    std::vector<double> v = {4, 1, 3, 2, 5};
    Description d = describe(v);
    EXPECT_EQ(d.n, 5u);
    EXPECT_DOUBLE_EQ(d.mean, 3.0);
    EXPECT_DOUBLE_EQ(d.std, std::sqrt(2.5));
    EXPECT_DOUBLE_EQ(d.min, 1.0);
    EXPECT_DOUBLE_EQ(d.q1, 2.0);
    EXPECT_DOUBLE_EQ(d.median, 3.0);
    EXPECT_DOUBLE_EQ(d.q3, 4.0);
    EXPECT_DOUBLE_EQ(d.max, 5.0);
    EXPECT_EQ(describe(std::vector<double>{7.0}).std, 0.0);
    EXPECT_THROW(describe(std::vector<double>{}), std::invalid_argument);
}

TEST(Quantile, LinearInterpolation) {
    std::vector<double> v = {10, 0, 20, 30};
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 30.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 15.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.25), 7.5);
}

TEST(KldUniform, Extremes) {
    EXPECT_NEAR(kld_uniform(std::vector<int>{5, 5, 5, 5}), 0.0, 1e-15);
    EXPECT_NEAR(kld_uniform(std::vector<int>{0, 9, 0, 0, 0, 0, 0, 0}), std::log(8.0), 1e-12);
    EXPECT_NEAR(kld_uniform(std::vector<double>{1.0, 3.0}),
                0.25 * std::log(0.5) + 0.75 * std::log(1.5), 1e-12);
    EXPECT_THROW(kld_uniform(std::vector<int>{0, 0}), std::invalid_argument);
    EXPECT_THROW(kld_uniform(std::vector<int>{}), std::invalid_argument);
}

TEST(ExtractVth, PiecewiseLinearOracle) {
    // Ideal above-threshold line on a dense grid: the tangent is the line.
    for (double vth : {0.2, 0.3137, 0.45}) {
        IvCurve c;
        for (int k = 0; k <= 600; ++k) {
            double v = k * 0.001;
            c.v_gs.push_back(v);
            c.i_d.push_back(std::max(0.0, 2e-5 * (v - vth)));
        }
        EXPECT_NEAR(extract_vth(c), vth, 1e-12) << vth;
    }
}

TEST(ExtractVth, SmoothTurnOn) {
    for (double vth : {0.25, 0.33, 0.41}) EXPECT_NEAR(extract_vth(synth_iv_curve(vth)), vth, 1e-4);
}

TEST(ExtractVth, InvariantUnderCurrentScale) {
    IvCurve c = synth_iv_curve(0.31);
    double v = extract_vth(c);
    for (double &i : c.i_d) i *= 1e3;
    EXPECT_NEAR(extract_vth(c), v, 1e-12);
}

TEST(ExtractVth, Errors) {
    IvCurve c = synth_iv_curve(0.3);
    c.i_d.pop_back();
    EXPECT_THROW(extract_vth(c), std::invalid_argument);
    IvCurve flat{{0.0, 0.1, 0.2}, {1.0, 1.0, 1.0}};
    EXPECT_THROW(extract_vth(flat), std::domain_error);
    IvCurve unsorted{{0.0, 0.2, 0.1}, {0.0, 1.0, 2.0}};
    EXPECT_THROW(extract_vth(unsorted), std::invalid_argument);
}

TEST(PosteriorSummary, MomentsAndInterval) {
    std::vector<PosteriorSample> s;
    for (int k = 0; k < 1001; ++k) s.push_back({k / 1000.0, 1.0, 0.02});
    auto p = posterior_summary(s);
    EXPECT_NEAR(p.slope.mean, 0.5, 1e-12);
    EXPECT_NEAR(p.slope.lo95, 0.025, 1e-12);
    EXPECT_NEAR(p.slope.hi95, 0.975, 1e-12);
    EXPECT_DOUBLE_EQ(p.intercept.std, 0.0);
    EXPECT_NEAR(propagated_spread(p, 0.04), std::sqrt(0.02 * 0.02 + 0.5 * 0.5 * 0.04 * 0.04), 1e-12);
    EXPECT_THROW(posterior_summary(std::vector<PosteriorSample>{}), std::invalid_argument);
}

TEST(LooScore, SinglePointMassMatchesLikelihood) {
    std::vector<PosteriorSample> s(10, PosteriorSample{2.0, 0.1, 0.5});
    std::vector<DataPoint> d = {{1.0, 2.1}, {0.0, 1.1}};
    double expected = 2 * (-0.5 * std::log(2 * M_PI) - std::log(0.5)) - 0.5 * 4.0;
    EXPECT_NEAR(loo_score(s, d), expected, 1e-12);
    EXPECT_THROW(loo_score(std::vector<PosteriorSample>{}, d), std::invalid_argument);
}

TEST(LooScore, PrefersTrueModel) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.02);
    std::vector<DataPoint> d;
    for (int k = 0; k < 100; ++k) {
        double x = 0.25 + 0.001 * k;
        d.push_back({x, 0.8 * x + 0.15 + n(rng)});
    }
    std::vector<PosteriorSample> truth(5, PosteriorSample{0.8, 0.15, 0.02});
    std::vector<PosteriorSample> wrong(5, PosteriorSample{0.0, 0.37, 0.02});
    EXPECT_GT(loo_score(truth, d), loo_score(wrong, d));
}

TEST(RegressionPosterior, GradientMatchesFiniteDifferences) {
    std::vector<DataPoint> d = {{0.3, 0.40}, {0.32, 0.41}, {0.35, 0.43}, {0.28, 0.37}};
    RegressionPosterior p(d, RegressionModel{});
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> slope(0.5, 1.5), icpt(-0.1, 0.3), ls(std::log(0.005), std::log(0.05));
    for (int point = 0; point < 10; ++point) {
        std::vector<double> q = {slope(rng), icpt(rng), ls(rng)}, g(3), tmp(3);
        p.log_density(q, g);
        for (std::size_t i = 0; i < 3; ++i) {
            const double h = 1e-6;
            auto up = q, dn = q;
            up[i] += h;
            dn[i] -= h;
            double fd = (p.log_density(up, tmp) - p.log_density(dn, tmp)) / (2 * h);
            EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "point " << point << " coord " << i;
        }
    }
}

TEST(RegressionModel, Validation) {
    RegressionModel m;
    m.slope.std = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = {};
    m.fixed_sigma = -1.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace qdfarm
