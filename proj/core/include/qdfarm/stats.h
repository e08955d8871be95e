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

#ifndef QDFARM_STATS_H
#define QDFARM_STATS_H

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "qdfarm/hmc.h"

namespace qdfarm {

// ---------------------------------------------------------------------------
// Descriptive statistics

struct Description {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  ///< N - 1 normalization; zero for a single value.
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;

    bool operator==(const Description &) const = default;
};

/// Throws std::invalid_argument on empty input.
Description describe(std::span<const double> values);

/// Linear-interpolated quantile (the "type 7" definition) of unsorted data.
double quantile(std::span<const double> values, double q);

/// KL(P || U) of a histogram against the uniform distribution over its bins.
/// Throws std::invalid_argument for an empty or all-zero histogram.
double kld_uniform(std::span<const int> counts);
double kld_uniform(std::span<const double> weights);

// ---------------------------------------------------------------------------
// Room-temperature threshold voltage

struct IvCurve {
    std::vector<double> v_gs;  ///< V, strictly increasing
    std::vector<double> i_d;   ///< A
    double v_ds = 0.05;        ///< V
};

/// Extrapolates the tangent at the maximum-transconductance sample to zero
/// current. Transconductance uses central differences (one-sided at the ends).
/// Throws std::invalid_argument on malformed curves and std::domain_error when
/// no sample has positive transconductance.
double extract_vth(const IvCurve &curve);

// ---------------------------------------------------------------------------
// Bayesian linear regression V_1e = slope * V_th + intercept + N(0, sigma)

struct NormalPrior {
    double mean = 0.0;
    double std = 1.0;
};

struct RegressionModel {
    NormalPrior slope{1.0, 1.0};
    NormalPrior intercept{0.0, 1.0};       ///< V
    NormalPrior log_sigma{std::log(0.02), 1.0};  ///< log of sigma in V
    /// When set, sigma is held at this value and only (slope, intercept) are sampled.
    std::optional<double> fixed_sigma;

    void validate() const;
};

struct DataPoint {
    double v_th = 0.0;
    double v_1e = 0.0;
};

/// Unnormalized log posterior over q = (slope, intercept[, log sigma]).
class RegressionPosterior final : public LogDensity {
   public:
    RegressionPosterior(std::vector<DataPoint> data, RegressionModel model);
    std::size_t dim() const override { return model_.fixed_sigma ? 2 : 3; }
    double log_density(std::span<const double> q, std::span<double> grad) const override;

    const std::vector<DataPoint> &data() const { return data_; }
    const RegressionModel &model() const { return model_; }

   private:
    std::vector<DataPoint> data_;
    RegressionModel model_;
};

struct PosteriorSample {
    double slope = 0.0;
    double intercept = 0.0;
    double sigma = 0.0;
};

struct Posterior {
    std::vector<PosteriorSample> samples;            ///< All chains concatenated.
    std::vector<std::vector<PosteriorSample>> chains;
    std::vector<double> acceptance_rate;             ///< Per chain.
    std::vector<double> step_size;                   ///< Per chain.
    int divergences = 0;
    std::array<double, 3> rhat{};                    ///< slope, intercept, sigma
    std::array<double, 3> ess{};
};

/// Samples the regression posterior with HMC. Chains start at the ordinary
/// least-squares solution plus a small seeded jitter. Throws
/// std::invalid_argument for fewer than 3 data points or invalid priors, and
/// HmcDivergenceError when divergences exceed the configured fraction.
Posterior hmc_fit(std::span<const DataPoint> data, const RegressionModel &model, const HmcConfig &config);

struct ParameterSummary {
    double mean = 0.0;
    double std = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
};

struct PosteriorSummary {
    ParameterSummary slope;
    ParameterSummary intercept;
    ParameterSummary sigma;
};

PosteriorSummary posterior_summary(std::span<const PosteriorSample> samples);
/// Mean/std/95% interval of one scalar sample set.
ParameterSummary summarize(std::span<const double> values);

struct PredictiveInterval {
    double v_th = 0.0;
    ParameterSummary line;        ///< slope * v_th + intercept
    ParameterSummary observation; ///< line plus N(0, sigma) noise
};

/// Predictive summary at `v_th`; the noise draws are seeded.
PredictiveInterval predictive_interval(std::span<const PosteriorSample> samples, double v_th, std::uint64_t seed = 1);

/// Observed V_1e spread implied by the posterior means and a threshold-voltage
/// spread: sqrt(sigma^2 + (slope * vth_std)^2).
double propagated_spread(const PosteriorSummary &summary, double vth_std);

/// Sum over data points of log(mean over samples of the point likelihood).
double loo_score(std::span<const PosteriorSample> samples, std::span<const DataPoint> data);

}  // namespace qdfarm

#endif  // QDFARM_STATS_H
