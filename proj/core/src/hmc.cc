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

#include "qdfarm/hmc.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace qdfarm {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DualAveraging {
    double delta = 0.8;
    double gamma = 0.05;
    double t0 = 10.0;
    double kappa = 0.75;
    double mu = 0.0;
    double h_bar = 0.0;
    double log_eps_bar = 0.0;
    int t = 0;

    void restart(double eps) {
        mu = std::log(10.0 * eps);
        h_bar = 0.0;
        log_eps_bar = 0.0;
        t = 0;
    }

    double update(double accept_prob) {
        ++t;
        double eta = 1.0 / (t + t0);
        h_bar = (1.0 - eta) * h_bar + eta * (delta - accept_prob);
        double log_eps = mu - std::sqrt(static_cast<double>(t)) / gamma * h_bar;
        double w = std::pow(static_cast<double>(t), -kappa);
        log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
        return std::exp(log_eps);
    }

    double final_step() const { return std::exp(log_eps_bar); }
};

class Sampler {
   public:
    Sampler(const LogDensity &target, std::vector<double> init, std::uint64_t seed)
        : target_(target), dim_(target.dim()), rng_(seed) {
        if (init.size() != dim_) {
            throw std::invalid_argument("HMC initial point has wrong dimension");
        }
        q_ = Eigen::Map<const Vec>(init.data(), dim_);
        grad_.resize(dim_);
        logp_ = eval(q_, grad_);
        if (!std::isfinite(logp_)) {
            throw std::invalid_argument("HMC initial point has non-finite log density");
        }
        set_inverse_metric(Mat::Identity(dim_, dim_));
    }

    void set_inverse_metric(const Mat &inv_metric) {
        inv_metric_ = inv_metric;
        chol_ = inv_metric_.llt().matrixL();
    }

    struct Transition {
        double accept_prob = 0.0;
        double energy_error = 0.0;
        bool divergent = false;
    };

    Transition step(double eps, int n_leapfrog, double divergence_threshold) {
        Vec z(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            z[i] = normal_(rng_);
        }
        // p ~ N(0, M) with M the inverse of inv_metric = L L^T.
        Vec p = chol_.transpose().triangularView<Eigen::Upper>().solve(z);
        double h0 = -logp_ + kinetic(p);

        Vec q = q_;
        Vec g = grad_;
        double logp = logp_;
        bool finite = true;
        p += 0.5 * eps * g;
        for (int s = 0; s < n_leapfrog; ++s) {
            q += eps * (inv_metric_ * p);
            logp = eval(q, g);
            if (!std::isfinite(logp)) {
                finite = false;
                break;
            }
            if (s + 1 < n_leapfrog) {
                p += eps * g;
            }
        }
        Transition tr;
        if (finite) {
            p += 0.5 * eps * g;
            double h1 = -logp + kinetic(p);
            tr.energy_error = h1 - h0;
        } else {
            tr.energy_error = std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(tr.energy_error) || tr.energy_error > divergence_threshold) {
            tr.divergent = true;
            tr.accept_prob = 0.0;
            return tr;
        }
        tr.accept_prob = std::min(1.0, std::exp(-tr.energy_error));
        if (uniform_(rng_) < tr.accept_prob) {
            q_ = q;
            grad_ = g;
            logp_ = logp;
        }
        return tr;
    }

    /// Doubling/halving search for a step size with acceptance near 0.5.
    double reasonable_step(double eps) {
        Vec saved_q = q_;
        Vec saved_g = grad_;
        double saved_logp = logp_;
        auto probe = [&](double e) {
            Vec z(dim_);
            for (std::size_t i = 0; i < dim_; ++i) z[i] = normal_(rng_);
            Vec p = chol_.transpose().triangularView<Eigen::Upper>().solve(z);
            double h0 = -saved_logp + kinetic(p);
            Vec g = saved_g;
            Vec q = saved_q;
            p += 0.5 * e * g;
            q += e * (inv_metric_ * p);
            double lp = eval(q, g);
            if (!std::isfinite(lp)) return 0.0;
            p += 0.5 * e * g;
            double dh = -lp + kinetic(p) - h0;
            return std::isfinite(dh) ? std::exp(-dh) : 0.0;
        };
        double a = probe(eps);
        int direction = a > 0.5 ? 1 : -1;
        for (int i = 0; i < 60; ++i) {
            double factor = direction > 0 ? 2.0 : 0.5;
            double next = eps * factor;
            a = probe(next);
            bool keep_going = direction > 0 ? a > 0.5 : a < 0.5;
            eps = next;
            if (!keep_going) break;
        }
        return eps;
    }

    const Vec &position() const { return q_; }
    std::mt19937_64 &rng() { return rng_; }

   private:
    double eval(const Vec &q, Vec &grad) const {
        return target_.log_density(std::span<const double>(q.data(), dim_), std::span<double>(grad.data(), dim_));
    }
    double kinetic(const Vec &p) const { return 0.5 * p.dot(inv_metric_ * p); }

    const LogDensity &target_;
    std::size_t dim_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    Vec q_;
    Vec grad_;
    double logp_ = 0.0;
    Mat inv_metric_;
    Mat chol_;
};

/// Expanding slow-adaptation windows: [start, end) pairs.
std::vector<std::pair<int, int>> metric_windows(int n_warmup) {
    int init_buffer = 75;
    int term_buffer = 50;
    int base_window = 25;
    if (n_warmup < 20) {
        return {};
    }
    if (init_buffer + term_buffer + base_window > n_warmup) {
        init_buffer = static_cast<int>(0.15 * n_warmup);
        term_buffer = static_cast<int>(0.1 * n_warmup);
        base_window = n_warmup - init_buffer - term_buffer;
    }
    std::vector<std::pair<int, int>> windows;
    int start = init_buffer;
    int size = base_window;
    int last = n_warmup - term_buffer;
    while (start < last) {
        int end = start + size;
        int next_size = 2 * size;
        if (end + next_size > last) {
            end = last;
        }
        windows.emplace_back(start, end);
        start = end;
        size = next_size;
    }
    return windows;
}

Mat regularized_covariance(const std::vector<Vec> &draws, const Mat &fallback) {
    const auto n = static_cast<double>(draws.size());
    if (draws.size() < 3) {
        return fallback;
    }
    const auto d = draws.front().size();
    Vec mean = Vec::Zero(d);
    for (const auto &x : draws) mean += x;
    mean /= n;
    Mat cov = Mat::Zero(d, d);
    for (const auto &x : draws) {
        Vec c = x - mean;
        cov += c * c.transpose();
    }
    cov /= (n - 1.0);
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        if (!(cov(i, i) > 0.0) || !std::isfinite(cov(i, i))) {
            return fallback;
        }
    }
    // Shrink toward the diagonal; scale-free so tiny posteriors are not swamped.
    Mat reg = (n / (n + 5.0)) * cov;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        reg(i, i) += 1e-3 * (5.0 / (n + 5.0)) * cov(i, i);
    }
    if (reg.llt().info() != Eigen::Success) {
        return fallback;
    }
    return reg;
}

std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>> &chains) {
    std::vector<std::vector<double>> out;
    for (const auto &c : chains) {
        std::size_t half = c.size() / 2;
        if (half < 2) {
            throw std::invalid_argument("chains too short for split diagnostics");
        }
        // Drop the middle draw of odd-length chains.
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

struct BetweenWithin {
    double w = 0.0;
    double var_plus = 0.0;
    std::vector<double> means;
};

BetweenWithin between_within(const std::vector<std::vector<double>> &chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    BetweenWithin bw;
    double grand = 0.0;
    for (const auto &c : chains) {
        double mean = 0.0;
        for (double x : c) mean += x;
        mean /= static_cast<double>(n);
        bw.means.push_back(mean);
        grand += mean;
        double var = 0.0;
        for (double x : c) var += (x - mean) * (x - mean);
        bw.w += var / static_cast<double>(n - 1);
    }
    grand /= static_cast<double>(m);
    bw.w /= static_cast<double>(m);
    double b_over_n = 0.0;
    if (m > 1) {
        for (double mean : bw.means) b_over_n += (mean - grand) * (mean - grand);
        b_over_n /= static_cast<double>(m - 1);
    }
    bw.var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * bw.w + b_over_n;
    return bw;
}

}  // namespace

void HmcConfig::validate() const {
    if (!(step_size > 0.0) || leapfrog_steps < 1 || n_samples < 1 || n_warmup < 0 || chains < 1) {
        throw std::invalid_argument("HMC configuration needs positive step size and counts");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw std::invalid_argument("HMC target acceptance must lie in (0, 1)");
    }
    if (step_jitter < 0.0 || step_jitter >= 1.0) {
        throw std::invalid_argument("HMC step jitter must lie in [0, 1)");
    }
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ChainResult run_hmc_chain(const LogDensity &target, std::vector<double> init, const HmcConfig &config,
                          std::uint64_t seed) {
    config.validate();
    const std::size_t dim = target.dim();
    Sampler sampler(target, std::move(init), seed);
    std::uniform_real_distribution<double> jitter(-config.step_jitter, config.step_jitter);

    double eps = config.step_size;
    DualAveraging da;
    da.delta = config.target_accept;
    if (config.adapt_step_size && config.n_warmup > 0) {
        eps = sampler.reasonable_step(eps);
        da.restart(eps);
    }

    auto windows = config.adapt_metric ? metric_windows(config.n_warmup) : std::vector<std::pair<int, int>>{};
    std::size_t window_idx = 0;
    std::vector<Vec> window_draws;
    Mat inv_metric = Mat::Identity(dim, dim);

    for (int it = 0; it < config.n_warmup; ++it) {
        double e = eps * (1.0 + jitter(sampler.rng()));
        auto tr = sampler.step(e, config.leapfrog_steps, config.divergence_threshold);
        if (config.adapt_step_size) {
            eps = da.update(tr.accept_prob);
        }
        if (window_idx < windows.size()) {
            auto [start, end] = windows[window_idx];
            if (it >= start && it < end) {
                window_draws.push_back(sampler.position());
            }
            if (it + 1 == end) {
                inv_metric = regularized_covariance(window_draws, inv_metric);
                sampler.set_inverse_metric(inv_metric);
                window_draws.clear();
                ++window_idx;
                if (config.adapt_step_size) {
                    eps = sampler.reasonable_step(eps);
                    da.restart(eps);
                }
            }
        }
    }
    if (config.adapt_step_size && config.n_warmup > 0) {
        eps = da.final_step();
    }

    ChainResult result;
    result.step_size = eps;
    result.draws.reserve(config.n_samples);
    double accept_sum = 0.0;
    for (int it = 0; it < config.n_samples; ++it) {
        double e = eps * (1.0 + jitter(sampler.rng()));
        auto tr = sampler.step(e, config.leapfrog_steps, config.divergence_threshold);
        accept_sum += tr.accept_prob;
        if (tr.divergent) {
            ++result.divergences;
        }
        result.max_energy_error.push_back(std::abs(tr.energy_error));
        const Vec &q = sampler.position();
        result.draws.emplace_back(q.data(), q.data() + dim);
    }
    result.acceptance_rate = accept_sum / config.n_samples;
    if (result.divergences > config.max_divergent_fraction * config.n_samples) {
        throw HmcDivergenceError("HMC: " + std::to_string(result.divergences) + " of " +
                                     std::to_string(config.n_samples) +
                                     " post-warmup trajectories diverged (step size " + std::to_string(eps) +
                                     ")",
                                 result.divergences, config.n_samples, eps);
    }
    return result;
}

std::vector<ChainResult> run_hmc(const LogDensity &target, const std::vector<std::vector<double>> &inits,
                                 const HmcConfig &config) {
    config.validate();
    if (inits.empty()) {
        throw std::invalid_argument("run_hmc needs at least one initial point");
    }
    std::vector<ChainResult> results(config.chains);
    std::vector<std::exception_ptr> errors(config.chains);
    std::vector<std::thread> threads;
    for (int k = 0; k < config.chains; ++k) {
        threads.emplace_back([&, k] {
            try {
                results[k] = run_hmc_chain(target, inits[k % inits.size()], config, mix_seed(config.seed, k));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto &t : threads) t.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

double split_rhat(const std::vector<std::vector<double>> &chains) {
    auto split = split_halves(chains);
    auto bw = between_within(split);
    if (!(bw.w > 0.0)) {
        return 1.0;
    }
    return std::sqrt(bw.var_plus / bw.w);
}

double effective_sample_size(const std::vector<std::vector<double>> &chains) {
    auto split = split_halves(chains);
    const std::size_t m = split.size();
    const std::size_t n = split.front().size();
    auto bw = between_within(split);
    if (!(bw.var_plus > 0.0)) {
        return static_cast<double>(m * n);
    }
    // Biased autocovariance of each chain at lag t.
    auto mean_acov = [&](std::size_t lag) {
        double total = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const auto &x = split[c];
            double mu = bw.means[c];
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
            total += s / static_cast<double>(n);
        }
        return total / static_cast<double>(m);
    };
    auto rho = [&](std::size_t lag) { return 1.0 - (bw.w - mean_acov(lag)) / bw.var_plus; };

    double sum_pairs = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = rho(2 * k) + rho(2 * k + 1);
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev_pair);  // initial monotone sequence
        sum_pairs += pair;
        prev_pair = pair;
    }
    double tau = -1.0 + 2.0 * sum_pairs;
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

}  // namespace qdfarm
