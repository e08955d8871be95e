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

#include "qdfarm/sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdfarm {

namespace {

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

// Probability that at least one of the given windows conducts.
template <typename F>
double union_of_levels(int levels, F window) {
    double blocked = 1.0;
    for (int k = 0; k < levels; ++k) {
        blocked *= 1.0 - window(k);
    }
    return 1.0 - blocked;
}

// Composite Simpson rule with 8 panels.
template <typename F>
double simpson(F f, double a, double b) {
    constexpr int n = 8;
    double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    }
    return s * h / 3.0;
}

}  // namespace

EdgeSlopes edge_slopes(double alpha_g, double asymmetry) {
    if (!(alpha_g > 0.0) || alpha_g > 1.0 || !(std::abs(asymmetry) < 1.0) || std::abs(asymmetry) + alpha_g > 1.0) {
        throw std::domain_error("edge_slopes: need alpha_g in (0, 1], |asymmetry| < 1, |asymmetry| + alpha_g <= 1");
    }
    return {2.0 * alpha_g / (1.0 - asymmetry), -2.0 * alpha_g / (1.0 + asymmetry)};
}

void SimDeviceSpec::validate() const {
    if (!(tunnel_rate_source > 0.0) || !(tunnel_rate_drain > 0.0)) {
        throw std::invalid_argument("tunnel rates must be strictly positive");
    }
    if (!(electron_temperature_mev > 0.0)) {
        throw std::invalid_argument("electron temperature must be positive");
    }
    if (n_averages < 1) {
        throw std::invalid_argument("n_averages must be at least 1");
    }
    if (noise_sigma < 0.0 || drift_amplitude < 0.0) {
        throw std::invalid_argument("noise and drift amplitudes must be non-negative");
    }
    if (mode == MapMode::DcDerivative) {
        throw std::invalid_argument("simulator synthesizes rf or dc_current maps only");
    }
    if (device_class == DeviceClass::Good) {
        dot.validate();
    }
    if (device_class == DeviceClass::Bad && !(bad.width > 0.0 && bad.ripple_period > 0.0)) {
        throw std::invalid_argument("bad-class turn-on width and ripple period must be positive");
    }
    if (device_class == DeviceClass::Multi) {
        if (multi.levels < 1 || !(multi.spacing_a > 0.0) || !(multi.spacing_b > 0.0)) {
            throw std::invalid_argument("multi-dot levels and spacings must be positive");
        }
        if (!(dot.alpha_g > 0.0) || !(multi.alpha_g > 0.0)) {
            throw std::invalid_argument("multi-dot lever arms must be positive");
        }
    }
}

Axis default_vg_axis() { return Axis{0.2, 0.6, 256}; }
Axis default_vds_axis() { return Axis{-0.02, 0.02, 128}; }

double level_window(double vg, double vds, double level_vg, double alpha_g, double asymmetry, double kt) {
    // Level energy relative to the Fermi energy at zero bias (in volts), with
    // V_D = V_DS / 2 and V_S = -V_DS / 2.
    double eps = alpha_g * (vg - level_vg) + 0.5 * asymmetry * vds;
    double x_d = (0.5 * vds - eps) / kt;
    double x_s = (eps + 0.5 * vds) / kt;
    return logistic(x_d) * logistic(x_s) + logistic(-x_d) * logistic(-x_s);
}

double clean_response(const SimDeviceSpec &spec, double vg, double vds) {
    const double kt = spec.electron_temperature_mev * 1e-3;
    const auto &dot = spec.dot;
    switch (spec.device_class) {
        case DeviceClass::Good: {
            double w = level_window(vg, vds, dot.v_1e, dot.alpha_g, dot.asymmetry, kt);
            if (dot.v_2e) {
                double w2 = level_window(vg, vds, *dot.v_2e, dot.alpha_g, dot.asymmetry, kt);
                w = 1.0 - (1.0 - w) * (1.0 - w2);
            }
            return w;
        }
        case DeviceClass::Bad: {
            const auto &b = spec.bad;
            double on = logistic((vg - b.turn_on + b.bias_tilt * std::abs(vds)) / b.width);
            double phase = 2.0 * std::numbers::pi * (vg - b.turn_on) / b.ripple_period;
            return on * (1.0 - b.ripple * 0.5 * (1.0 + std::cos(phase)));
        }
        case DeviceClass::Multi: {
            const auto &m = spec.multi;
            double a = union_of_levels(m.levels, [&](int k) {
                return level_window(vg, vds, dot.v_1e + k * m.spacing_a, dot.alpha_g, dot.asymmetry, kt);
            });
            double b = union_of_levels(m.levels, [&](int k) {
                return level_window(vg, vds, dot.v_1e + m.offset + k * m.spacing_b, m.alpha_g, m.asymmetry, kt);
            });
            return a * b;
        }
    }
    return 0.0;
}

double conductance_scale(const SimDeviceSpec &spec) {
    double gamma = 1.0 / (1.0 / spec.tunnel_rate_source + 1.0 / spec.tunnel_rate_drain);
    return kElementaryCharge * gamma / 1e-3;
}

ChargeStabilityMap synth_map(const SimDeviceSpec &spec, const Axis &vg, const Axis &vds, std::uint64_t seed,
                             std::string device_id) {
    spec.validate();
    vg.validate("vg");
    vds.validate("vds");
    if (std::abs(vds.min + vds.max) > 1e-12 * vds.span()) {
        throw std::invalid_argument("synth_map: V_DS axis must be antisymmetric about zero");
    }

    ChargeStabilityMap map(std::move(device_id), spec.mode, vg, vds);
    const std::size_t rows = vds.count;
    const std::size_t cols = vg.count;

    if (spec.mode == MapMode::Rf) {
        for (std::size_t r = 0; r < rows; ++r) {
            double v = vds.at(r);
            for (std::size_t c = 0; c < cols; ++c) {
                map.at(r, c) = clean_response(spec, vg.at(c), v);
            }
        }
    } else {
        // I_D(V_GS, V_DS) = g * integral_0^V_DS R dv, integrated outward from
        // zero bias in both directions.
        const double g = conductance_scale(spec);
        for (std::size_t c = 0; c < cols; ++c) {
            double x = vg.at(c);
            auto f = [&](double v) { return clean_response(spec, x, v); };
            double acc = 0.0;
            double prev = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                double v = vds.at(r);
                if (v < 0.0) continue;
                acc += simpson(f, prev, v);
                map.at(r, c) = g * acc;
                prev = v;
            }
            acc = 0.0;
            prev = 0.0;
            for (std::size_t r = rows; r-- > 0;) {
                double v = vds.at(r);
                if (v >= 0.0) continue;
                acc += simpson(f, prev, v);
                map.at(r, c) = g * acc;
                prev = v;
            }
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // dc noise is referred to the V_DS derivative: central differences of
    // white noise with std s have std s / (sqrt(2) h).
    double unit = spec.mode == MapMode::Rf ? 1.0 : conductance_scale(spec) * std::sqrt(2.0) * vds.step();
    if (spec.drift_amplitude > 0.0) {
        double walk = normal(rng);
        double step = 1.0 / std::sqrt(static_cast<double>(rows));
        for (std::size_t r = 0; r < rows; ++r) {
            if (r > 0) walk += step * normal(rng);
            double offset = spec.drift_amplitude * unit * walk;
            for (double &x : map.row(r)) x += offset;
        }
    }
    if (spec.noise_sigma > 0.0) {
        double s = spec.noise_sigma / std::sqrt(static_cast<double>(spec.n_averages)) * unit;
        for (double &x : map.values()) x += s * normal(rng);
    }
    return map;
}

IvCurve synth_iv_curve(double vth, double v_min, double v_max, std::size_t samples, double transconductance,
                       double subthreshold_width) {
    if (samples < 3 || !(v_max > v_min) || !(subthreshold_width > 0.0)) {
        throw std::invalid_argument("synth_iv_curve: bad sweep");
    }
    IvCurve curve;
    for (std::size_t k = 0; k < samples; ++k) {
        double v = v_min + (v_max - v_min) * static_cast<double>(k) / static_cast<double>(samples - 1);
        curve.v_gs.push_back(v);
        curve.i_d.push_back(transconductance * subthreshold_width * softplus((v - vth) / subthreshold_width));
    }
    return curve;
}

FarmSpec default_farm_spec() {
    struct Row {
        int length;
        ClassMix mix;
        double v1e;
    };
    // V_1e rises slowly with gate length (weaker drain-induced barrier lowering).
    const Row rows[] = {
        {28, {0.70, 0.25, 0.05}, 0.387},
        {40, {0.65, 0.15, 0.20}, 0.400},
        {60, {0.20, 0.05, 0.75}, 0.412},
        {80, {0.05, 0.05, 0.90}, 0.420},
    };
    FarmSpec farm;
    for (const auto &row : rows) {
        for (int width : {80, 100}) {
            InstanceSetSpec s;
            s.gate_length_nm = row.length;
            s.channel_width_nm = width;
            s.mix = row.mix;
            s.v1e_mean = row.v1e;
            farm.sets.push_back(s);
        }
    }
    return farm;
}

std::pair<double, double> sample_lever_arms(const InstanceSetSpec &set, std::mt19937_64 &rng) {
    std::normal_distribution<double> alpha(set.alpha_mean, set.alpha_std);
    std::normal_distribution<double> asym(set.asym_mean, set.asym_std);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        double a = alpha(rng);
        double d = asym(rng);
        if (a >= 0.5 && a <= 1.0 && std::abs(d) + a <= 1.0) {
            return {a, d};
        }
    }
    throw std::invalid_argument("lever-arm distribution has negligible physical mass");
}

namespace {

DeviceClass draw_class(const ClassMix &mix, std::mt19937_64 &rng) {
    double total = mix.good + mix.bad + mix.multi;
    if (!(total > 0.0) || mix.good < 0.0 || mix.bad < 0.0 || mix.multi < 0.0) {
        throw std::invalid_argument("class mix must be non-negative with positive total");
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    if (u < mix.good) return DeviceClass::Good;
    if (u < mix.good + mix.bad) return DeviceClass::Bad;
    return DeviceClass::Multi;
}

}  // namespace

std::vector<FarmDevice> plan_farm(const FarmSpec &farm, const FarmLayout &layout, std::uint64_t seed) {
    if (static_cast<int>(farm.sets.size()) != layout.set_count()) {
        throw std::invalid_argument("farm spec and layout disagree on the number of instance sets");
    }
    std::vector<FarmDevice> devices;
    devices.reserve(kFarmCells);
    for (int index = 0; index < kFarmCells; ++index) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(index)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

        FarmDevice dev;
        dev.index = index;
        dev.device_id = device_name(index);
        dev.set_id = layout.set_of(index);
        dev.position = layout.position_of(index);
        const auto &set = farm.sets[dev.set_id];

        dev.truth_class = draw_class(set.mix, rng);
        auto [alpha, asym] = sample_lever_arms(set, rng);
        DotParameters dot;
        dot.v_1e = std::normal_distribution<double>(set.v1e_mean, set.v1e_std)(rng);
        dot.alpha_g = alpha;
        dot.asymmetry = asym;
        double spacing = std::max(0.010, std::normal_distribution<double>(set.spacing_mean, set.spacing_std)(rng));
        if (unit(rng) < set.second_level_fraction) {
            dot.v_2e = dot.v_1e + spacing;
            dot.charging_energy = spacing * alpha * 1e3;
        }

        SimDeviceSpec spec;
        spec.gate_length_nm = set.gate_length_nm;
        spec.channel_width_nm = set.channel_width_nm;
        spec.dot = dot;
        spec.electron_temperature_mev = farm.electron_temperature_mev;
        spec.device_class = dev.truth_class;
        spec.noise_sigma = farm.noise_sigma;
        spec.drift_amplitude = farm.drift_amplitude;
        spec.n_averages = farm.n_averages;
        spec.mode = farm.mode;
        // Barrier rates spread over a decade around 1.5e10 1/s.
        spec.tunnel_rate_source = 1.5e10 * std::pow(10.0, uniform(-0.5, 0.5));
        spec.tunnel_rate_drain = 1.5e10 * std::pow(10.0, uniform(-0.5, 0.5));

        spec.bad.turn_on = uniform(0.30, 0.48);
        spec.bad.width = uniform(0.002, 0.006);
        spec.bad.ripple = uniform(0.0, 0.15);
        spec.bad.ripple_period = uniform(0.015, 0.030);
        spec.bad.bias_tilt = uniform(0.0, 0.1);

        spec.multi.offset = (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(0.012, 0.030);
        spec.multi.alpha_g = uniform(0.5, 0.8);
        spec.multi.asymmetry = uniform(-0.2, 0.2);
        spec.multi.spacing_a = uniform(0.015, 0.030);
        spec.multi.spacing_b = uniform(0.015, 0.030);
        spec.multi.levels = 3;

        dev.truth = dot;
        dev.spec = spec;
        dev.seed = mix_seed(seed ^ 0xA5A5A5A5ULL, static_cast<std::uint64_t>(index));
        devices.push_back(std::move(dev));
    }
    return devices;
}

ChargeStabilityMap render_device(const FarmDevice &device, const FarmSpec &farm) {
    return synth_map(device.spec, farm.vg, farm.vds, device.seed, device.device_id);
}

std::vector<SimulatedDevice> synth_farm(const FarmSpec &farm, const FarmLayout &layout, std::uint64_t seed) {
    auto plan = plan_farm(farm, layout, seed);
    std::vector<SimulatedDevice> out;
    out.reserve(plan.size());
    for (auto &dev : plan) {
        auto map = render_device(dev, farm);
        out.push_back({std::move(dev), std::move(map)});
    }
    return out;
}

}  // namespace qdfarm
