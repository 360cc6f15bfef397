// adiabatic.hpp - spinwave dynamics with the excited state eliminated.
//
//   (d/dt + gamma) S = i sqrt(d) Gamma (conj(Omega)/Delta) (E+ + E-)
//   d/dz E+- = +-i sqrt(d) (Omega/Delta) S
//
// The probes are slaved to the instantaneous spinwave: E+ is marched from
// z = 0 and E- from z = 1 at every Runge-Kutta stage.

#pragma once

#include "tracemem/core.hpp"

namespace tracemem::adiabatic {

struct MismatchSpec {
    // Total spinwave phase mismatch across the memory (radians), applied to the
    // backward pair as exp(i * delta_k * z).
    double delta_k = 0.0;
    // Relative global phase of the forward control-probe pair (radians).
    double global_phase = 0.0;
};

// Store `input` (rescaled to unit total energy). The output is split into
// transmitted (up to the end of the input, or the first gate window for inputs
// of unbounded support) and recalled (afterwards) energy.
SimulationResult simulate_storage(const EnsembleConfig& config, const Grid& grid,
                                  const PulseShape& input, const ControlProfile& control,
                                  const MismatchSpec& mismatch = {});

// Retrieve an initial spinwave with no optical input. energy_in is the initial
// spinwave energy and all output counts as recalled.
SimulationResult simulate_retrieval(const EnsembleConfig& config, const Grid& grid,
                                    std::span<const Complex> initial_spinwave,
                                    const ControlProfile& control, const MismatchSpec& mismatch = {});

// General entry point: arbitrary per-port inputs (not rescaled), initial
// spinwave, and the time separating transmitted from recalled output.
SimulationResult simulate(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                          std::span<const Complex> initial_spinwave, const ControlProfile& control,
                          const MismatchSpec& mismatch, double split_time);

// max_z |S(z) - <S>| / |<S>|. Throws ConfigError for a zero-mean spinwave.
double uniformity_metric(std::span<const Complex> spinwave);
double uniformity_metric(const FieldState& state);

// Spinwave energy int |S|^2 dz on the uniform z grid.
double spinwave_energy(std::span<const Complex> spinwave);

}  // namespace tracemem::adiabatic
