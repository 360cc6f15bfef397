// core.hpp - shared domain types for the TRACE memory simulator.
//
// Unit convention: time in 1/Gamma, rates and detunings in Gamma. Fields are
// complex mean-field amplitudes; energies are normalized so that
//   energy(field) = Gamma * int |E|^2 dt,   energy(spinwave) = int |S|^2 dz.

#pragma once

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tracemem {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

inline constexpr Complex kI{0.0, 1.0};

// Bad user input (configuration, grids, shapes).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A solver produced a non-finite or otherwise unusable state.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A statistical fit failed to converge or produced unphysical parameters.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExcitedLevel {
    double offset = 0.0;    // detuning of this level from the reference level
    double strength = 1.0;  // line strength relative to the reference level
};

struct EnsembleConfig {
    double optical_depth = 0.0;  // d
    double gamma_e = 1.0;        // half natural linewidth
    double gamma_s = 0.0;        // spinwave amplitude decay rate
    double delta_plus = 40.0;    // forward probe single-photon detuning
    double delta_minus = -40.0;  // backward probe single-photon detuning
    // Reference level first; empty means a single reference level.
    std::vector<ExcitedLevel> excited_levels;
};

struct Grid {
    std::size_t nz = 201;
    std::size_t nt = 8192;
    double dt = 1e-3;
    double t0 = 0.0;

    double time(std::size_t n) const { return t0 + dt * static_cast<double>(n); }
    double t_end() const { return time(nt - 1); }
    double dz() const { return 1.0 / static_cast<double>(nz - 1); }
    double z(std::size_t j) const { return static_cast<double>(j) * dz(); }

    // Grid with nt samples spanning [t_begin, t_end] inclusive.
    static Grid spanning(double t_begin, double t_end, std::size_t nt, std::size_t nz = 201);
};

struct FieldState {
    ComplexVec e_plus;
    ComplexVec e_minus;
    ComplexVec s;
    ComplexVec p_plus;   // three-level model only
    ComplexVec p_minus;  // three-level model only

    static FieldState zeros(std::size_t nz, bool with_coherences = false);
    std::size_t size() const { return s.size(); }
    bool finite() const;
    // Throws ConfigError if array lengths disagree.
    void check_shape() const;
};

struct RisingExponential {
    double amplitude = 1.0;  // C1, value at the cutoff
    double rate = 1.0;       // amplitude growth rate k
    double cutoff = 0.0;     // storage end time
};

struct GaussianPulse {
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;  // amplitude ~ exp(-(t-center)^2 / (2 width^2))
};

struct SampledPulse {
    double t0 = 0.0;
    double dt = 1.0;
    ComplexVec values;  // linear interpolation between samples
};

// Per-port input envelope. Both ports carry the same envelope; the forward
// copy additionally carries exp(i * phase).
struct PulseShape {
    std::variant<RisingExponential, GaussianPulse, SampledPulse> kind;
    double phase = 0.0;

    // Envelope value continued analytically past the support edges.
    Complex envelope(double t) const;
    // Closed interval outside of which the pulse is zero.
    std::pair<double, double> support() const;
    bool in_support(double t) const;
    // Copy with amplitude multiplied by c.
    PulseShape scaled(double c) const;
};

// Independent per-port inputs. Each pulse's own phase is applied to its port.
struct PortInputs {
    std::optional<PulseShape> plus;   // enters at z = 0
    std::optional<PulseShape> minus;  // enters at z = 1
};

struct GateWindow {
    double t_on = 0.0;
    double t_off = 0.0;
};

// Forward control Rabi frequency sampled on a time grid. Samples outside every
// gate window are zero; windows are closed intervals.
struct ControlProfile {
    double t0 = 0.0;
    double dt = 1.0;
    ComplexVec omega;
    std::vector<GateWindow> schedule;

    std::size_t size() const { return omega.size(); }
    double t_end() const { return t0 + dt * static_cast<double>(omega.size() - 1); }
    bool gate_open(double t) const;
    // Grid with the same time sampling.
    Grid grid(std::size_t nz = 201) const;

    // Constant omega inside the given windows, zero elsewhere.
    static ControlProfile constant(const Grid& grid, Complex omega, std::vector<GateWindow> windows);
    static ControlProfile zero(const Grid& grid);
};

struct SimulationResult {
    std::vector<double> time;
    ComplexVec e_out_plus;   // exiting at z = 1
    ComplexVec e_out_minus;  // exiting at z = 0
    double energy_in = 0.0;
    double energy_transmitted = 0.0;
    double energy_recalled = 0.0;
    double energy_residual = 0.0;  // stored excitation left at the end
    double transmitted_plus = 0.0;
    double transmitted_minus = 0.0;
    double recalled_plus = 0.0;
    double recalled_minus = 0.0;
    double efficiency = 0.0;
    ComplexVec spinwave_final;
    FieldState final_state;
    std::map<std::string, double> diagnostics;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_config(const EnsembleConfig& config, const Grid& grid,
                                 std::optional<double> max_omega = std::nullopt);

// Throws ConfigError listing every violation.
void require_valid(const EnsembleConfig& config, const Grid& grid);

// int (|E+(0,t)|^2 + |E-(1,t)|^2) dt over the grid nodes, trapezoidal rule.
double input_energy(const PulseShape& shape, const Grid& grid);

// Trapezoidal quadrature on a uniform grid.
double trapezoid(std::span<const double> f, double h);
Complex trapezoid(std::span<const Complex> f, double h);
double norm2_trapezoid(std::span<const Complex> f, double h);

// Cumulative trapezoid, out[0] = 0.
void cumulative_trapezoid(std::span<const Complex> f, double h, std::span<Complex> out);

bool all_finite(std::span<const Complex> v);

}  // namespace tracemem
