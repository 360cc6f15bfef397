// three_level.hpp - non-adiabatic model with explicit excited-state coherences.
//
//   dP+-/dt = -(Gamma + i Delta+-) P+- + i Omega+- S + i sqrt(d) Gamma E+-
//   dE+/dz  =  i sqrt(d) P+        (from z = 0)
//   dE-/dz  = -i sqrt(d) P-        (from z = 1)
//   dS/dt   = -gamma S + i (conj(Omega+) P+ + conj(Omega-) P-)
//
// The backward control is Omega- = Omega * sgn(Delta+ Delta-). The linear
// -(Gamma + i Delta) decay is integrated exactly (Lawson RK4); the field
// feedback, whose rate scales with d Gamma, is explicit and sets the substep.

#pragma once

#include "tracemem/core.hpp"

namespace tracemem::three_level {

struct SolverOptions {
    // Substeps are chosen so that h * Gamma * (1 + d) <= stability_limit.
    double stability_limit = 0.5;
    // When false an unstable grid step is reported instead of subdivided.
    bool auto_substep = true;
    // Repeat with halved steps until the efficiency changes by less than
    // convergence_tolerance (at most max_halvings times).
    bool verify_convergence = false;
    double convergence_tolerance = 1e-4;
    int max_halvings = 4;
};

struct FullRun {
    SimulationResult result;
    // Per time node ||P+ - P-|| / (||P+|| + ||P-||); NaN where both vanish.
    std::vector<double> coherence_asymmetry;
    double initial_energy = 0.0;    // int |S|^2 + |P+|^2 + |P-|^2 dz at t0
    double excited_loss = 0.0;      // int 2 Gamma int (|P+|^2 + |P-|^2) dz dt
    double spinwave_loss = 0.0;     // int 2 gamma int |S|^2 dz dt
    double remaining_energy = 0.0;  // int |S|^2 + |P+|^2 + |P-|^2 dz at the end
    double ledger_error = 0.0;      // relative imbalance of the energy ledger
    int substeps = 1;
};

// General run: initial state (s, p_plus, p_minus used; empty coherences mean
// zero), optical inputs on both ports, output split at split_time.
FullRun simulate_full(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                      const FieldState& initial, const ControlProfile& control, double split_time,
                      const SolverOptions& options = {});

// Retrieval of an initial spinwave with zero optical input; efficiency is the
// recalled energy over the initial spinwave energy.
FullRun simulate_retrieval_full(const EnsembleConfig& config, const Grid& grid,
                                std::span<const Complex> initial_spinwave, const ControlProfile& control,
                                const SolverOptions& options = {});

// Storage of arbitrary per-port inputs from an empty memory; efficiency is the
// stored energy (spinwave plus coherences) over the input energy.
FullRun simulate_storage_full(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                              const ControlProfile& control, const SolverOptions& options = {});

// Retrieve with a constant control, extending the run until the remaining
// excitation is below completion_threshold of the initial energy.
FullRun complete_retrieval(const EnsembleConfig& config, std::span<const Complex> initial_spinwave,
                           double omega, double dt, double max_time, double completion_threshold = 1e-6,
                           const SolverOptions& options = {});

// Inputs that time-reverse a retrieval: the output leaving through z = 1
// re-enters from z = 1 reversed in time, and likewise for z = 0.
//
// With equal detunings on both ports the reversal also conjugates envelopes
// and control, and storage writes back conj(S). With opposite detunings the
// reversed process runs in the sign-flipped system, which maps onto this one
// by conjugation; the two conjugations cancel and storage writes back S.
PortInputs time_reversed_inputs(const SimulationResult& retrieval, bool conjugate);
ControlProfile time_reversed_control(const ControlProfile& control, bool conjugate);

// true for delta- == delta+, false for delta- == -delta+; otherwise throws.
bool reversal_conjugates(const EnsembleConfig& config);

// Time average of the coherence asymmetry. Throws if the coherences vanish
// throughout the run.
double adiabatic_residual(const FullRun& run);

// exp(i kappa z) with kappa = d Gamma Delta+ / (Gamma^2 + Delta+^2), the phase
// both probes accumulate crossing the medium; a good seed for optimal_round_trip.
ComplexVec dispersion_matched_spinwave(const EnsembleConfig& config, std::size_t nz);

// Uniform-mode reduction: each slice z evolves alone, with the field feedback
// folded into the decay rates Gamma (1 + d z) for P+ and Gamma (1 + d (1 - z))
// for P-, and emits at 2 d Gamma (z |P+|^2 + (1 - z) |P-|^2). With a constant
// control the t -> infinity energies follow from a Lyapunov equation per slice.
struct ReducedRetrieval {
    double efficiency = 0.0;   // emitted / initial
    double scattered = 0.0;    // 2 Gamma int int |P|^2 over initial
    double dephased = 0.0;     // 2 gamma int int |S|^2 over initial
};
ReducedRetrieval reduced_retrieval(const EnsembleConfig& config, std::span<const Complex> initial_spinwave,
                                   Complex omega);

// Storage followed by retrieval through literal time reversal.
struct RoundTrip {
    double storage_efficiency = 0.0;
    double retrieval_efficiency = 0.0;
    double total_efficiency = 0.0;
    ComplexVec spinwave;  // unit-energy spinwave reached by the iteration
};

// Iterates retrieval -> time-reversed storage starting from `seed_spinwave`
// (power iteration on the memory kernel), then reports the efficiencies of the
// final storage and a retrieval of what it stored.
RoundTrip optimal_round_trip(const EnsembleConfig& config, std::span<const Complex> seed_spinwave,
                             double omega, double dt, double max_time, int iterations,
                             const SolverOptions& options = {});

}  // namespace tracemem::three_level
