// phase.hpp - phase-matching geometry, residual dispersion and fringe offsets.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracemem/core.hpp"
#include "tracemem/stats.hpp"

namespace tracemem::phase {

// SI units. The backward pair mirrors the forward pair (k_p- = -k_p+,
// k_c- = -k_c+), so both write the spinwave momentum k_s = k_p - k_c.
struct GeometryConfig {
    double lambda_probe = 795e-9;              // m
    double hyperfine_splitting = 6.834682611e9;  // Hz
    double theta = 6e-3;                       // probe-control angle, rad

    void check() const;  // lambda > 0, splitting >= 0, |theta| < 0.1
};

struct PhysicalConstants {
    double atomic_mass = 1.443160648e-25;  // kg, rubidium-87
    double boltzmann = 1.380649e-23;       // J/K
    double speed_of_light = 299792458.0;   // m/s
};

// |k_s| = sqrt((2 pi theta / lambda)^2 + (2 pi splitting / c)^2), rad/m.
double spinwave_wavenumber(const GeometryConfig& geom, const PhysicalConstants& constants = {});
double spinwave_wavelength(const GeometryConfig& geom, const PhysicalConstants& constants = {});

// T = m lambda_s^2 / (k_B (2 pi)^2 tau_g^2), i.e. tau_g = 1 / (k_s v) with
// v = sqrt(k_B T / m).
double temperature_from_gaussian_tau(double tau_g, double lambda_s, const PhysicalConstants& constants = {});
double gaussian_tau_from_temperature(double temperature, double lambda_s, const PhysicalConstants& constants = {});

// ---------------------------------------------------------------------------
// Dispersion from several excited levels. Detunings and level offsets are in
// units of gamma_e, measured from the reference (first) level.

// phi(delta) = -(d gamma_e / 2) sum_j f_j / (delta - offset_j), accumulated
// across the whole memory.
double dispersive_phase(const EnsembleConfig& config, double delta);

// phi(delta+) + phi(delta-); zero for a single level with delta- = -delta+.
double dispersion_mismatch(const EnsembleConfig& config);

// |phi(delta+) + phi(delta-)| reduced into [0, 2 pi).
double dispersion_phase_offset(const EnsembleConfig& config);

// Rubidium-87 D1 line, in MHz.
inline constexpr double kD1Linewidth = 5.75;          // unit of detuning
inline constexpr double kD1ExcitedSplitting = 814.5;  // F'=2 above F'=1
// sigma line strengths 1/2 (F'=1) and 1/6 (F'=2) from |F=2, m=2>.
inline constexpr double kD1StandardStrengthRatio = 1.0 / 3.0;
// Fit so that d = 500 at +-230 MHz gives a 0.14 rad offset.
inline constexpr double kD1CalibratedStrengthRatio = 0.03649993220700884;

// Two-level D1 ensemble with probes at +-detuning_mhz about F'=1.
EnsembleConfig d1_config(double optical_depth, double detuning_mhz, double strength_ratio);

// Strength ratio for which d1_config(d, detuning, ratio) has the given offset.
double calibrate_strength_ratio(double optical_depth, double detuning_mhz, double target_offset);

struct DetuningCorrection {
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double adjustment = 0.0;       // delta_minus - (-delta_plus)
    double residual_offset = 0.0;  // dispersion_phase_offset after the change
};

// Moves delta- (delta+ fixed) to cancel the mismatch, by bracketed root finding.
DetuningCorrection correct_detuning(const EnsembleConfig& config);

// ---------------------------------------------------------------------------
// Fringe offsets from the adiabatic solver

// Fringe of each output channel against the global phase, from storage and
// recall of `input` with `control` (which must contain the recall window).
struct FringeResponse {
    std::array<stats::Sinusoid, stats::kChannels> channels;
    double input_energy = 0.0;
};

// Scans phase_points global phases over [0, 2 pi) and fits each channel.
FringeResponse fringe_response(const EnsembleConfig& config, const Grid& grid, const PulseShape& input,
                               const ControlProfile& control, double delta_k, std::size_t phase_points = 8);

struct MismatchRow {
    double delta_k = 0.0;
    double transmitted_offset = 0.0;  // forward minus backward fringe phase
    double recalled_offset = 0.0;
    double max_efficiency = 0.0;      // largest recalled / input over the phase scan
    std::string error;                // non-empty when the row failed
};

// Rows sorted by delta_k. Offsets are continued through +-pi along the sweep,
// starting from the row nearest delta_k = 0.
std::vector<MismatchRow> mismatch_fringe_sweep(const EnsembleConfig& config, const Grid& grid,
                                               const PulseShape& input, const ControlProfile& control,
                                               std::vector<double> delta_k, std::size_t phase_points = 8,
                                               unsigned jobs = 1);

struct FringeTrainSpec {
    std::size_t runs = 4;
    std::size_t pulses = 17;
    double phase_step = 0.3 * 3.14159265358979323846;
    // Additive Gaussian noise per channel, as a fraction of that channel's fringe amplitude.
    double noise = 0.0;
};

// Pulse train with an unknown uniform phase per run, drawn from the seed.
stats::FringeDataset synthetic_fringe_train(const FringeResponse& response, const FringeTrainSpec& spec,
                                            std::uint64_t seed);

}  // namespace tracemem::phase
