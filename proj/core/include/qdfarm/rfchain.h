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

#ifndef QDFARM_RFCHAIN_H
#define QDFARM_RFCHAIN_H

#include <complex>
#include <limits>
#include <span>

#include "qdfarm/map.h"

namespace qdfarm {

/// Tank circuit: coupling capacitor C_C in series from the line into a
/// parallel L / (C_p,chip + C_p,PCB) / R_loss tank that the device loads.
struct ResonatorModel {
    double inductance = 32.7e-9;
    double coupling_capacitance = 0.8e-12;
    double parasitic_chip = 0.8e-12;
    double parasitic_pcb = 3.06e-12;
    double line_impedance = 50.0;
    /// Parallel resistance standing in for internal losses.
    double internal_loss_resistance = std::numeric_limits<double>::infinity();
    double resonator_impedance = 75.0;  ///< Reported metadata only.

    double total_capacitance() const { return coupling_capacitance + parasitic_chip + parasitic_pcb; }
    /// Throws std::invalid_argument unless all circuit values are positive.
    void validate() const;
};

/// f_r = 1 / (2 pi sqrt(L C)). Throws std::domain_error unless L, C > 0.
double resonant_frequency(double inductance, double capacitance);
double resonant_frequency(const ResonatorModel &model);

/// Input impedance seen from the line with the device resistance in parallel
/// with the tank. Pass +infinity for a blockaded device.
std::complex<double> input_impedance(const ResonatorModel &model, double frequency, double device_resistance);

/// Reflection coefficient (Z_in - Z_0) / (Z_in + Z_0). Throws
/// std::domain_error for non-positive frequency or device resistance.
std::complex<double> reflection(const ResonatorModel &model, double frequency,
                                double device_resistance = std::numeric_limits<double>::infinity());

/// Ratio of internal to external quality factor, Q_i / Q_e, at f_r.
double coupling_coefficient(const ResonatorModel &model);
double internal_quality(const ResonatorModel &model);
double external_quality(const ResonatorModel &model);
double loaded_quality(const ResonatorModel &model);

/// Returns `model` with the internal loss resistance chosen so that
/// coupling_coefficient equals `beta` (undercoupled for beta < 1).
ResonatorModel calibrate_loss(ResonatorModel model, double beta);

/// Smallest |Gamma| over a fine sweep of +-20% around f_r.
double reflection_dip(const ResonatorModel &model, double device_resistance = std::numeric_limits<double>::infinity());

struct SnrSample {
    double x = 0.0;  ///< Integration time (s) or probe frequency (Hz).
    double y = 0.0;  ///< SNR or SNR^2.
};

/// Fits SNR^2 = tau / t_min through the origin by least squares. Throws
/// std::invalid_argument for fewer than two samples or non-positive tau and
/// std::domain_error when the fitted slope is not positive.
double fit_t_min(std::span<const SnrSample> samples);

/// Width of the (f, SNR^2) curve at half its maximum, linearly interpolated.
/// Samples must be sorted by frequency. Throws std::domain_error when the
/// half maximum is not crossed on both sides of the peak.
double bandwidth_fwhm(std::span<const SnrSample> samples);

/// Half-open rectangle of map pixels.
struct Region {
    std::size_t row_begin = 0, row_end = 0;
    std::size_t col_begin = 0, col_end = 0;

    bool empty() const { return row_end <= row_begin || col_end <= col_begin; }
    bool overlaps(const Region &o) const;
};

/// (max over peak region - background mean) / background std (N-1). Throws
/// std::invalid_argument for empty, out-of-range or overlapping regions and
/// std::domain_error for zero background variance.
double snr_of_map(const ChargeStabilityMap &map, const Region &peak, const Region &background);

}  // namespace qdfarm

#endif  // QDFARM_RFCHAIN_H
