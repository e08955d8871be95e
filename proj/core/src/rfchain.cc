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

#include "qdfarm/rfchain.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace qdfarm {

void ResonatorModel::validate() const {
    if (!(inductance > 0.0) || !(coupling_capacitance > 0.0) || !(parasitic_chip > 0.0) || !(parasitic_pcb > 0.0) ||
        !(line_impedance > 0.0) || !(internal_loss_resistance > 0.0)) {
        throw std::invalid_argument("resonator circuit values must be positive");
    }
}

double resonant_frequency(double inductance, double capacitance) {
    if (!(inductance > 0.0) || !(capacitance > 0.0)) {
        throw std::domain_error("resonant_frequency: L and C must be positive");
    }
    return 1.0 / (2.0 * std::numbers::pi * std::sqrt(inductance * capacitance));
}

double resonant_frequency(const ResonatorModel &model) {
    return resonant_frequency(model.inductance, model.total_capacitance());
}

std::complex<double> input_impedance(const ResonatorModel &model, double frequency, double device_resistance) {
    using namespace std::complex_literals;
    const double w = 2.0 * std::numbers::pi * frequency;
    // Admittance of the tank node: inductor, parasitic capacitance, losses and device.
    std::complex<double> y = 1.0 / (1i * w * model.inductance);
    y += 1i * w * (model.parasitic_chip + model.parasitic_pcb);
    if (std::isfinite(model.internal_loss_resistance)) y += 1.0 / model.internal_loss_resistance;
    if (std::isfinite(device_resistance)) y += 1.0 / device_resistance;
    return 1.0 / (1i * w * model.coupling_capacitance) + 1.0 / y;
}

std::complex<double> reflection(const ResonatorModel &model, double frequency, double device_resistance) {
    if (!(frequency > 0.0) || !(device_resistance > 0.0)) {
        throw std::domain_error("reflection: frequency and device resistance must be positive");
    }
    model.validate();
    std::complex<double> z = input_impedance(model, frequency, device_resistance);
    return (z - model.line_impedance) / (z + model.line_impedance);
}

namespace {

// Parallel resistance equivalent to the line seen through C_C at f_r.
double external_resistance(const ResonatorModel &model) {
    const double w = 2.0 * std::numbers::pi * resonant_frequency(model);
    const double x = w * model.coupling_capacitance * model.line_impedance;
    return (1.0 + x * x) / (w * w * model.coupling_capacitance * model.coupling_capacitance * model.line_impedance);
}

double characteristic_impedance(const ResonatorModel &model) {
    return 2.0 * std::numbers::pi * resonant_frequency(model) * model.inductance;
}

}  // namespace

double internal_quality(const ResonatorModel &model) {
    return model.internal_loss_resistance / characteristic_impedance(model);
}

double external_quality(const ResonatorModel &model) {
    return external_resistance(model) / characteristic_impedance(model);
}

double loaded_quality(const ResonatorModel &model) {
    return 1.0 / (1.0 / internal_quality(model) + 1.0 / external_quality(model));
}

double coupling_coefficient(const ResonatorModel &model) {
    return internal_quality(model) / external_quality(model);
}

ResonatorModel calibrate_loss(ResonatorModel model, double beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("calibrate_loss: beta must be positive");
    }
    model.internal_loss_resistance = beta * external_resistance(model);
    return model;
}

double reflection_dip(const ResonatorModel &model, double device_resistance) {
    const double fr = resonant_frequency(model);
    constexpr int n = 40001;
    double best = 1.0;
    for (int k = 0; k < n; ++k) {
        double f = fr * (0.8 + 0.4 * k / (n - 1));
        best = std::min(best, std::abs(reflection(model, f, device_resistance)));
    }
    return best;
}

double fit_t_min(std::span<const SnrSample> samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("fit_t_min: need at least two samples");
    }
    double sxy = 0.0, sxx = 0.0;
    for (const auto &s : samples) {
        if (!(s.x > 0.0)) {
            throw std::invalid_argument("fit_t_min: integration times must be positive");
        }
        sxy += s.x * s.y * s.y;
        sxx += s.x * s.x;
    }
    double slope = sxy / sxx;
    if (!(slope > 0.0)) {
        throw std::domain_error("fit_t_min: SNR^2 does not grow with integration time");
    }
    return 1.0 / slope;
}

double bandwidth_fwhm(std::span<const SnrSample> samples) {
    if (samples.size() < 3) {
        throw std::domain_error("bandwidth_fwhm: need at least three samples");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i].x > samples[i - 1].x)) {
            throw std::invalid_argument("bandwidth_fwhm: frequencies must be strictly increasing");
        }
    }
    auto peak = std::max_element(samples.begin(), samples.end(),
                                 [](const SnrSample &a, const SnrSample &b) { return a.y < b.y; });
    const std::size_t ip = static_cast<std::size_t>(peak - samples.begin());
    const double half = 0.5 * peak->y;
    if (!(half > 0.0)) {
        throw std::domain_error("bandwidth_fwhm: peak must be positive");
    }
    auto cross = [&](std::size_t a, std::size_t b) {
        const auto &p = samples[a];
        const auto &q = samples[b];
        return p.x + (half - p.y) * (q.x - p.x) / (q.y - p.y);
    };
    std::optional<double> left, right;
    for (std::size_t i = ip; i > 0; --i) {
        if (samples[i - 1].y <= half) {
            left = cross(i - 1, i);
            break;
        }
    }
    for (std::size_t i = ip; i + 1 < samples.size(); ++i) {
        if (samples[i + 1].y <= half) {
            right = cross(i, i + 1);
            break;
        }
    }
    if (!left || !right) {
        throw std::domain_error("bandwidth_fwhm: half maximum not crossed on both sides");
    }
    return *right - *left;
}

bool Region::overlaps(const Region &o) const {
    return !empty() && !o.empty() && row_begin < o.row_end && o.row_begin < row_end && col_begin < o.col_end &&
           o.col_begin < col_end;
}

double snr_of_map(const ChargeStabilityMap &map, const Region &peak, const Region &background) {
    auto inside = [&](const Region &r) { return r.row_end <= map.rows() && r.col_end <= map.cols(); };
    if (peak.empty() || background.empty() || !inside(peak) || !inside(background)) {
        throw std::invalid_argument("snr_of_map: regions must be nonempty and inside the map");
    }
    if (peak.overlaps(background)) {
        throw std::invalid_argument("snr_of_map: peak and background regions overlap");
    }
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (std::size_t r = background.row_begin; r < background.row_end; ++r) {
        for (std::size_t c = background.col_begin; c < background.col_end; ++c) {
            double v = map.at(r, c);
            sum += v;
            sumsq += v * v;
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (sumsq - sum * mean) / static_cast<double>(n - 1)) : 0.0;
    if (!(var > 0.0)) {
        throw std::domain_error("snr_of_map: background has zero variance");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t r = peak.row_begin; r < peak.row_end; ++r) {
        for (std::size_t c = peak.col_begin; c < peak.col_end; ++c) top = std::max(top, map.at(r, c));
    }
    return (top - mean) / std::sqrt(var);
}

}  // namespace qdfarm
