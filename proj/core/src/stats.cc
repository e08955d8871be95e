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

#include "qdfarm/stats.h"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace qdfarm {

double quantile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile of empty data");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Description describe(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("describe needs at least one value");
    }
    Description d;
    d.n = values.size();
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(d.n);
    if (d.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - d.mean) * (v - d.mean);
        d.std = std::sqrt(ss / static_cast<double>(d.n - 1));
    }
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    d.min = *mn;
    d.max = *mx;
    d.q1 = quantile(values, 0.25);
    d.median = quantile(values, 0.5);
    d.q3 = quantile(values, 0.75);
    return d;
}

double kld_uniform(std::span<const double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("kld_uniform of an empty histogram");
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw std::invalid_argument("histogram weights must be finite and non-negative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("kld_uniform of an all-zero histogram");
    }
    const double k = static_cast<double>(weights.size());
    double kl = 0.0;
    for (double w : weights) {
        if (w > 0.0) {
            double p = w / total;
            kl += p * std::log(p * k);
        }
    }
    return std::max(kl, 0.0);
}

double kld_uniform(std::span<const int> counts) {
    std::vector<double> w(counts.begin(), counts.end());
    return kld_uniform(std::span<const double>(w));
}

double extract_vth(const IvCurve &curve) {
    const auto &v = curve.v_gs;
    const auto &i = curve.i_d;
    if (v.size() != i.size()) {
        throw std::invalid_argument("I-V curve voltage and current lengths differ");
    }
    if (v.size() < 3) {
        throw std::invalid_argument("I-V curve needs at least 3 samples");
    }
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) {
            throw std::invalid_argument("I-V curve gate voltages must be strictly increasing");
        }
    }
    const std::size_t n = v.size();
    std::size_t best = 0;
    double best_gm = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t a = k == 0 ? 0 : k - 1;
        std::size_t b = k + 1 == n ? n - 1 : k + 1;
        double gm = (i[b] - i[a]) / (v[b] - v[a]);
        if (gm > best_gm) {
            best_gm = gm;
            best = k;
        }
    }
    if (!(best_gm > 0.0)) {
        throw std::domain_error("I-V curve has no positive transconductance");
    }
    return v[best] - i[best] / best_gm;
}

void RegressionModel::validate() const {
    for (const NormalPrior *p : {&slope, &intercept, &log_sigma}) {
        if (!(p->std > 0.0) || !std::isfinite(p->mean) || !std::isfinite(p->std)) {
            throw std::invalid_argument("regression priors need finite means and positive stds");
        }
    }
    if (fixed_sigma && !(*fixed_sigma > 0.0)) {
        throw std::invalid_argument("fixed sigma must be positive");
    }
}

RegressionPosterior::RegressionPosterior(std::vector<DataPoint> data, RegressionModel model)
    : data_(std::move(data)), model_(model) {
    model_.validate();
}

double RegressionPosterior::log_density(std::span<const double> q, std::span<double> grad) const {
    const double a = q[0];
    const double b = q[1];
    const double log_sigma = model_.fixed_sigma ? std::log(*model_.fixed_sigma) : q[2];
    const double inv_var = std::exp(-2.0 * log_sigma);

    double ss = 0.0;
    double ga = 0.0;
    double gb = 0.0;
    for (const auto &d : data_) {
        double r = d.v_1e - a * d.v_th - b;
        ss += r * r;
        ga += r * d.v_th;
        gb += r;
    }
    const double n = static_cast<double>(data_.size());
    double lp = -0.5 * ss * inv_var - n * log_sigma;
    grad[0] = ga * inv_var;
    grad[1] = gb * inv_var;

    auto prior = [](double x, const NormalPrior &p, double &g) {
        double z = (x - p.mean) / p.std;
        g += -z / p.std;
        return -0.5 * z * z;
    };
    lp += prior(a, model_.slope, grad[0]);
    lp += prior(b, model_.intercept, grad[1]);
    if (!model_.fixed_sigma) {
        grad[2] = ss * inv_var - n;
        lp += prior(log_sigma, model_.log_sigma, grad[2]);
    }
    return lp;
}

namespace {

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sigma = 0.0;
    double se_slope = 0.0;
    double se_intercept = 0.0;
};

OlsFit ordinary_least_squares(std::span<const DataPoint> data) {
    const double n = static_cast<double>(data.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto &d : data) {
        mx += d.v_th;
        my += d.v_1e;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto &d : data) {
        sxx += (d.v_th - mx) * (d.v_th - mx);
        sxy += (d.v_th - mx) * (d.v_1e - my);
    }
    OlsFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (const auto &d : data) {
        double r = d.v_1e - f.slope * d.v_th - f.intercept;
        ss += r * r;
    }
    f.sigma = std::sqrt(ss / std::max(n - 2.0, 1.0));
    f.se_slope = sxx > 0.0 ? f.sigma / std::sqrt(sxx) : f.sigma;
    f.se_intercept = f.sigma * std::sqrt(1.0 / n + (sxx > 0.0 ? mx * mx / sxx : 0.0));
    return f;
}

}  // namespace

Posterior hmc_fit(std::span<const DataPoint> data, const RegressionModel &model, const HmcConfig &config) {
    if (data.size() < 3) {
        throw std::invalid_argument("hmc_fit needs at least 3 data points");
    }
    model.validate();
    config.validate();
    RegressionPosterior target(std::vector<DataPoint>(data.begin(), data.end()), model);

    OlsFit ols = ordinary_least_squares(data);
    const double sigma_floor = model.fixed_sigma ? *model.fixed_sigma : 1e-6;
    double init_sigma = std::max(ols.sigma, sigma_floor);
    std::mt19937_64 rng(mix_seed(config.seed, 0xC0FFEE));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> inits;
    for (int k = 0; k < config.chains; ++k) {
        std::vector<double> q{ols.slope + 0.5 * std::max(ols.se_slope, 1e-9) * normal(rng),
                              ols.intercept + 0.5 * std::max(ols.se_intercept, 1e-9) * normal(rng)};
        if (!model.fixed_sigma) {
            q.push_back(std::log(init_sigma) + 0.1 * normal(rng));
        }
        inits.push_back(std::move(q));
    }

    auto chains = run_hmc(target, inits, config);

    Posterior post;
    std::array<std::vector<std::vector<double>>, 3> per_param;
    for (auto &p : per_param) p.resize(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        std::vector<PosteriorSample> chain;
        chain.reserve(chains[c].draws.size());
        for (const auto &q : chains[c].draws) {
            PosteriorSample s{q[0], q[1], model.fixed_sigma ? *model.fixed_sigma : std::exp(q[2])};
            chain.push_back(s);
            per_param[0][c].push_back(s.slope);
            per_param[1][c].push_back(s.intercept);
            per_param[2][c].push_back(s.sigma);
        }
        post.samples.insert(post.samples.end(), chain.begin(), chain.end());
        post.chains.push_back(std::move(chain));
        post.acceptance_rate.push_back(chains[c].acceptance_rate);
        post.step_size.push_back(chains[c].step_size);
        post.divergences += chains[c].divergences;
    }
    const std::size_t n_params = model.fixed_sigma ? 2 : 3;
    for (std::size_t p = 0; p < 3; ++p) {
        if (p < n_params && per_param[p].front().size() >= 4) {
            post.rhat[p] = split_rhat(per_param[p]);
            post.ess[p] = effective_sample_size(per_param[p]);
        } else {
            post.rhat[p] = 1.0;
            post.ess[p] = static_cast<double>(post.samples.size());
        }
    }
    return post;
}

ParameterSummary summarize(std::span<const double> values) {
    auto d = describe(values);
    return {d.mean, d.std, quantile(values, 0.025), quantile(values, 0.975)};
}

PosteriorSummary posterior_summary(std::span<const PosteriorSample> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("posterior_summary needs samples");
    }
    std::vector<double> a, b, s;
    for (const auto &x : samples) {
        a.push_back(x.slope);
        b.push_back(x.intercept);
        s.push_back(x.sigma);
    }
    return {summarize(a), summarize(b), summarize(s)};
}

PredictiveInterval predictive_interval(std::span<const PosteriorSample> samples, double v_th, std::uint64_t seed) {
    if (samples.empty()) {
        throw std::invalid_argument("predictive_interval needs samples");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> line, obs;
    for (const auto &x : samples) {
        double mu = x.slope * v_th + x.intercept;
        line.push_back(mu);
        obs.push_back(mu + x.sigma * normal(rng));
    }
    return {v_th, summarize(line), summarize(obs)};
}

double propagated_spread(const PosteriorSummary &summary, double vth_std) {
    double s = summary.sigma.mean;
    double a = summary.slope.mean;
    return std::sqrt(s * s + a * a * vth_std * vth_std);
}

double loo_score(std::span<const PosteriorSample> samples, std::span<const DataPoint> data) {
    if (samples.empty()) {
        throw std::invalid_argument("loo_score needs posterior samples");
    }
    const double log_s = std::log(static_cast<double>(samples.size()));
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    std::vector<double> terms(samples.size());
    double total = 0.0;
    for (const auto &d : data) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const auto &s = samples[k];
            double r = (d.v_1e - s.slope * d.v_th - s.intercept) / s.sigma;
            terms[k] = -half_log_2pi - std::log(s.sigma) - 0.5 * r * r;
            mx = std::max(mx, terms[k]);
        }
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - mx);
        total += mx + std::log(acc) - log_s;
    }
    return total;
}

}  // namespace qdfarm
