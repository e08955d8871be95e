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

#ifndef QDFARM_SIM_H
#define QDFARM_SIM_H

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qdfarm/dot.h"
#include "qdfarm/layout.h"
#include "qdfarm/map.h"
#include "qdfarm/stats.h"

namespace qdfarm {

/// Diamond-edge slopes dV_DS/dV_GS of a single dot under antisymmetric bias.
struct EdgeSlopes {
    double positive = 0.0;  ///< Drain-resonance edge, m1 > 0.
    double negative = 0.0;  ///< Source-resonance edge, m2 < 0.
};

/// m1 = 2 alpha_g / (1 - asymmetry), m2 = -2 alpha_g / (1 + asymmetry).
/// Throws std::domain_error unless alpha_g in (0, 1], |asymmetry| < 1 and
/// |asymmetry| + alpha_g <= 1.
EdgeSlopes edge_slopes(double alpha_g, double asymmetry);

/// Logistic turn-on with a weak periodic ripple.
struct BadShape {
    double turn_on = 0.40;        ///< V
    double width = 0.003;         ///< V
    double ripple = 0.1;          ///< Relative ripple depth.
    double ripple_period = 0.02;  ///< V
    double bias_tilt = 0.05;      ///< Turn-on shift per volt of |V_DS|.
};

/// Second dot in series with the first; both must be resonant to conduct.
struct MultiShape {
    double offset = 0.018;        ///< First level of dot B relative to v_1e, V.
    double alpha_g = 0.6;         ///< Lever arm of dot B.
    double asymmetry = 0.1;       ///< Asymmetry of dot B.
    double spacing_a = 0.025;     ///< Level spacing of dot A, V.
    double spacing_b = 0.022;     ///< Level spacing of dot B, V.
    int levels = 3;               ///< Levels per dot.
};

struct SimDeviceSpec {
    int gate_length_nm = 28;
    int channel_width_nm = 80;
    DotParameters dot;
    double electron_temperature_mev = 0.8;  ///< Thermal broadening k_B T, meV.
    double tunnel_rate_source = 1.5e10;     ///< 1/s
    double tunnel_rate_drain = 1.5e10;      ///< 1/s
    DeviceClass device_class = DeviceClass::Good;
    double noise_sigma = 0.0;   ///< Per-point noise for one average, response units.
    double drift_amplitude = 0.0;
    int n_averages = 1;
    MapMode mode = MapMode::Rf;  ///< Rf or DcCurrent.
    BadShape bad;
    MultiShape multi;

    /// Throws std::invalid_argument on non-positive rates, temperature or
    /// averages, and on invalid dot parameters for Good devices.
    void validate() const;
};

/// Default V_GS axis: 256 samples over [0.2, 0.6] V.
Axis default_vg_axis();
/// Default V_DS axis: 128 samples over [-20, 20] mV.
Axis default_vds_axis();

/// Default per-point noise giving a zero-bias Coulomb peak SNR of about 20.
inline constexpr double kDefaultNoiseSigma = 0.025;
inline constexpr double kDefaultDriftAmplitude = 0.05;

/// Thermally broadened transport window of one level, in [0, 1]. Zero inside
/// the diamonds, one deep inside the bias window, and 0.5 cosh^-2 at V_DS = 0.
double level_window(double vg, double vds, double level_vg, double alpha_g, double asymmetry, double kt);

/// Noise-free rf-mode response of a device (the V_DS derivative of the dc
/// current in units of the conductance scale).
double clean_response(const SimDeviceSpec &spec, double vg, double vds);

/// Conductance scale |e| Gamma / 1 mV in A/V with Gamma the harmonic
/// combination of the two tunnel rates.
double conductance_scale(const SimDeviceSpec &spec);

/// Forward-synthesizes a map. Deterministic for fixed seed. Throws
/// std::invalid_argument if the V_DS axis is not antisymmetric about zero or
/// the spec is invalid.
ChargeStabilityMap synth_map(const SimDeviceSpec &spec, const Axis &vg, const Axis &vds, std::uint64_t seed,
                             std::string device_id = {});

/// Room-temperature transfer curve with a smooth (softplus) turn-on at `vth`.
IvCurve synth_iv_curve(double vth, double v_min = 0.0, double v_max = 0.6, std::size_t samples = 121,
                       double transconductance = 1e-5, double subthreshold_width = 0.003);

// ---------------------------------------------------------------------------
// Farm synthesis

struct ClassMix {
    double good = 1.0;
    double bad = 0.0;
    double multi = 0.0;
};

struct InstanceSetSpec {
    int gate_length_nm = 28;
    int channel_width_nm = 80;
    ClassMix mix;
    double v1e_mean = 0.387;
    double v1e_std = 0.022;
    double alpha_mean = 0.741;
    double alpha_std = 0.082;
    double asym_mean = -0.040;
    double asym_std = 0.150;
    double second_level_fraction = 0.5;
    double spacing_mean = 0.025;
    double spacing_std = 0.004;
};

struct FarmSpec {
    std::vector<InstanceSetSpec> sets;
    Axis vg = default_vg_axis();
    Axis vds = default_vds_axis();
    double noise_sigma = kDefaultNoiseSigma;
    double drift_amplitude = kDefaultDriftAmplitude;
    int n_averages = 1;
    double electron_temperature_mev = 0.8;
    MapMode mode = MapMode::Rf;
};

/// Eight sets (L = 28/40/60/80 nm x W = 80/100 nm) with the class mix shifting
/// from single dots at short gates to multi-dot behaviour at long gates.
FarmSpec default_farm_spec();

/// Draws (alpha_g, asymmetry) from independent normals, rejecting draws that
/// violate alpha_g in [0.5, 1] or |asymmetry| + alpha_g <= 1.
std::pair<double, double> sample_lever_arms(const InstanceSetSpec &set, std::mt19937_64 &rng);

struct FarmDevice {
    int index = 0;
    std::string device_id;
    int set_id = 0;
    GridPos position;
    DeviceClass truth_class = DeviceClass::Good;
    DotParameters truth;  ///< Meaningful for Good devices.
    SimDeviceSpec spec;
    std::uint64_t seed = 0;  ///< Map noise seed.
};

/// Samples every device's ground truth and spec (no maps). Deterministic for
/// fixed seed; each device draws from its own seeded stream.
std::vector<FarmDevice> plan_farm(const FarmSpec &farm, const FarmLayout &layout, std::uint64_t seed);

ChargeStabilityMap render_device(const FarmDevice &device, const FarmSpec &farm);

struct SimulatedDevice {
    FarmDevice device;
    ChargeStabilityMap map;
};

/// plan_farm followed by render_device for all 1024 devices.
std::vector<SimulatedDevice> synth_farm(const FarmSpec &farm, const FarmLayout &layout, std::uint64_t seed);

}  // namespace qdfarm

#endif  // QDFARM_SIM_H
