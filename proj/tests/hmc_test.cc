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

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "qdfarm/hmc.h"
#include "qdfarm/stats.h"

namespace qdfarm {
namespace {

// Correlated 2D Gaussian with known covariance.
class Gaussian2d final : public LogDensity {
   public:
    Gaussian2d() {
        cov_ << 1.0, 0.8, 0.8, 2.0;
        prec_ = cov_.inverse();
        mean_ << 1.0, -2.0;
    }
    std::size_t dim() const override { return 2; }
    double log_density(std::span<const double> q, std::span<double> grad) const override {
        Eigen::Vector2d x(q[0], q[1]);
        Eigen::Vector2d g = -prec_ * (x - mean_);
        grad[0] = g[0];
        grad[1] = g[1];
        return 0.5 * (x - mean_).dot(g);
    }
    Eigen::Matrix2d cov_, prec_;
    Eigen::Vector2d mean_;
};

TEST(Hmc, RecoversGaussianMoments) {
    Gaussian2d target;
    HmcConfig cfg;
    cfg.n_samples = 4000;
    cfg.chains = 2;
    auto chains = run_hmc(target, {{0.0, 0.0}, {2.0, 1.0}}, cfg);
    ASSERT_EQ(chains.size(), 2u);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
    double n = 0;
    for (const auto &c : chains) {
        EXPECT_EQ(c.draws.size(), 4000u);
        EXPECT_EQ(c.divergences, 0);
        for (const auto &d : c.draws) {
            Eigen::Vector2d x(d[0], d[1]);
            mean += x;
            second += x * x.transpose();
            ++n;
        }
    }
    mean /= n;
    Eigen::Matrix2d cov = second / n - mean * mean.transpose();
    EXPECT_NEAR(mean[0], 1.0, 0.1);
    EXPECT_NEAR(mean[1], -2.0, 0.12);
    EXPECT_NEAR(cov(0, 0), 1.0, 0.1);
    EXPECT_NEAR(cov(1, 1), 2.0, 0.2);
    EXPECT_NEAR(cov(0, 1), 0.8, 0.1);
}

TEST(Hmc, DeterministicPerSeed) {
    Gaussian2d target;
    HmcConfig cfg;
    cfg.n_samples = 200;
    cfg.n_warmup = 200;
    auto a = run_hmc_chain(target, {0.0, 0.0}, cfg, 17);
    auto b = run_hmc_chain(target, {0.0, 0.0}, cfg, 17);
    auto c = run_hmc_chain(target, {0.0, 0.0}, cfg, 18);
    EXPECT_EQ(a.draws, b.draws);
    EXPECT_NE(a.draws, c.draws);
}

TEST(Hmc, ConfigValidation) {
    HmcConfig cfg;
    cfg.step_size = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.n_samples = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Diagnostics, RhatAndEss) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    std::vector<std::vector<double>> iid(4, std::vector<double>(1000));
    for (auto &c : iid) {
        for (double &v : c) v = n(rng);
    }
    EXPECT_NEAR(split_rhat(iid), 1.0, 0.01);
    double ess = effective_sample_size(iid);
    EXPECT_GT(ess, 3000.0);
    EXPECT_LT(ess, 5000.0);
    auto shifted = iid;
    for (double &v : shifted[0]) v += 3.0;
    EXPECT_GT(split_rhat(shifted), 1.1);
}

std::vector<DataPoint> regression_data(std::uint64_t seed, int n = 200) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> vth(0.31, 0.02), noise(0.0, 0.015);
    std::vector<DataPoint> d;
    for (int k = 0; k < n; ++k) {
        double x = vth(rng);
        d.push_back({x, 0.9 * x + 0.105 + noise(rng)});
    }
    return d;
}

TEST(HmcFit, MatchesConjugateOracleWithFixedSigma) {
    auto data = regression_data(11);
    RegressionModel model;
    model.fixed_sigma = 0.015;
    // Closed-form Gaussian posterior over (slope, intercept).
    Eigen::Matrix2d prec = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    const double s2 = 0.015 * 0.015;
    for (const auto &p : data) {
        Eigen::Vector2d x(p.v_th, 1.0);
        prec += x * x.transpose() / s2;
        rhs += x * p.v_1e / s2;
    }
    prec(0, 0) += 1.0 / (model.slope.std * model.slope.std);
    prec(1, 1) += 1.0 / (model.intercept.std * model.intercept.std);
    rhs[0] += model.slope.mean / (model.slope.std * model.slope.std);
    rhs[1] += model.intercept.mean / (model.intercept.std * model.intercept.std);
    Eigen::Matrix2d cov = prec.inverse();
    Eigen::Vector2d mean = cov * rhs;

    HmcConfig cfg;
    cfg.chains = 4;
    cfg.n_samples = 2000;
    auto post = hmc_fit(data, model, cfg);
    auto s = posterior_summary(post.samples);
    const double sd_a = std::sqrt(cov(0, 0)), sd_b = std::sqrt(cov(1, 1));
    EXPECT_NEAR(s.slope.mean, mean[0], 0.1 * sd_a);
    EXPECT_NEAR(s.intercept.mean, mean[1], 0.1 * sd_b);
    EXPECT_NEAR(s.slope.std / sd_a, 1.0, 0.1);
    EXPECT_NEAR(s.intercept.std / sd_b, 1.0, 0.1);
    EXPECT_NEAR(s.sigma.mean, 0.015, 1e-12);
}

TEST(HmcFit, RecoversGeneratingParameters) {
    auto data = regression_data(3);
    HmcConfig cfg;
    cfg.chains = 4;
    cfg.n_samples = 2000;
    auto post = hmc_fit(data, RegressionModel{}, cfg);
    auto s = posterior_summary(post.samples);
    EXPECT_NEAR(s.slope.mean, 0.9, 2 * s.slope.std);
    EXPECT_NEAR(s.intercept.mean, 0.105, 2 * s.intercept.std);
    EXPECT_NEAR(s.sigma.mean, 0.015, 2 * s.sigma.std);
    for (int p = 0; p < 3; ++p) {
        EXPECT_LT(post.rhat[p], 1.01) << p;
        EXPECT_GT(post.ess[p], 400.0) << p;
    }
    for (double a : post.acceptance_rate) {
        EXPECT_GT(a, 0.6);
        EXPECT_LT(a, 0.98);
    }
    EXPECT_EQ(post.samples.size(), 8000u);
}

TEST(HmcFit, PosteriorNarrowsWithMoreCollinearData) {
    double prev_a = 1e9, prev_b = 1e9;
    for (int n : {10, 40, 160}) {
        std::vector<DataPoint> d;
        for (int k = 0; k < n; ++k) {
            double x = 0.15 + 0.05 * k / (n - 1);
            d.push_back({x, 1.01 * x + 0.21});
        }
        RegressionModel m;
        m.fixed_sigma = 0.001;
        HmcConfig cfg;
        cfg.chains = 2;
        auto s = posterior_summary(hmc_fit(d, m, cfg).samples);
        EXPECT_NEAR(s.slope.mean, 1.01, 3 * s.slope.std) << n;
        EXPECT_LT(s.slope.std, prev_a) << n;
        EXPECT_LT(s.intercept.std, prev_b) << n;
        prev_a = s.slope.std;
        prev_b = s.intercept.std;
    }
}

TEST(HmcFit, RejectsTinyData) {
    std::vector<DataPoint> d = {{0.3, 0.4}, {0.31, 0.41}};
    EXPECT_THROW(hmc_fit(d, RegressionModel{}, HmcConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace qdfarm
