#include "tracemem/adiabatic.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "drive.hpp"

namespace tracemem::adiabatic {

namespace {

struct Flux {
    double in = 0.0;
    double out_plus = 0.0;
    double out_minus = 0.0;
    double decay = 0.0;  // 2 gamma int |S|^2 dz
};

Flux operator+(Flux a, const Flux& b)
{
    return {a.in + b.in, a.out_plus + b.out_plus, a.out_minus + b.out_minus, a.decay + b.decay};
}

Flux operator*(double c, Flux a)
{
    return {c * a.in, c * a.out_plus, c * a.out_minus, c * a.decay};
}

class Equations {
public:
    Equations(const EnsembleConfig& config, const Grid& grid, const MismatchSpec& mismatch)
        : nz_(grid.nz),
          dz_(grid.dz()),
          sqrt_d_(std::sqrt(config.optical_depth)),
          gamma_e_(config.gamma_e),
          gamma_s_(config.gamma_s),
          inv_delta_plus_(1.0 / config.delta_plus),
          // Backward control phase makes the Raman couplings share a sign.
          inv_delta_minus_((config.delta_plus * config.delta_minus > 0.0 ? 1.0 : -1.0) /
                           config.delta_minus),
          phase_(grid.nz),
          weighted_(grid.nz),
          cumulative_(grid.nz)
    {
        for (std::size_t j = 0; j < nz_; ++j) phase_[j] = std::polar(1.0, mismatch.delta_k * grid.z(j));
    }

    // Probe amplitudes at the exit faces for spinwave s.
    std::pair<Complex, Complex> outputs(const ComplexVec& s, const detail::StageDrive& d)
    {
        const Complex r_plus = d.omega * inv_delta_plus_;
        const Complex r_minus = d.omega * inv_delta_minus_;
        for (std::size_t j = 0; j < nz_; ++j) weighted_[j] = phase_[j] * s[j];
        const Complex out_plus = d.ein_plus + kI * sqrt_d_ * r_plus * trapezoid(std::span<const Complex>(s), dz_);
        const Complex out_minus =
            d.ein_minus + kI * sqrt_d_ * r_minus * trapezoid(std::span<const Complex>(weighted_), dz_);
        return {out_plus, out_minus};
    }

    // Fills fields e_plus/e_minus for spinwave s.
    void fields(const ComplexVec& s, const detail::StageDrive& d, ComplexVec& e_plus, ComplexVec& e_minus)
    {
        const Complex r_plus = d.omega * inv_delta_plus_;
        const Complex r_minus = d.omega * inv_delta_minus_;
        cumulative_trapezoid(s, dz_, cumulative_);
        for (std::size_t j = 0; j < nz_; ++j) e_plus[j] = d.ein_plus + kI * sqrt_d_ * r_plus * cumulative_[j];
        for (std::size_t j = 0; j < nz_; ++j) weighted_[j] = phase_[j] * s[j];
        cumulative_trapezoid(weighted_, dz_, cumulative_);
        const Complex total = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) {
            e_minus[j] = d.ein_minus + kI * sqrt_d_ * r_minus * (total - cumulative_[j]);
        }
    }

    Flux rhs(const ComplexVec& s, const detail::StageDrive& d, ComplexVec& ds)
    {
        const Complex r_plus = d.omega * inv_delta_plus_;
        const Complex r_minus = d.omega * inv_delta_minus_;
        const Complex c_plus = kI * sqrt_d_ * gamma_e_ * std::conj(r_plus);
        const Complex c_minus = kI * sqrt_d_ * gamma_e_ * std::conj(r_minus);

        cumulative_trapezoid(s, dz_, cumulative_);
        const Complex total_plus = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) {
            const Complex e_plus = d.ein_plus + kI * sqrt_d_ * r_plus * cumulative_[j];
            ds[j] = c_plus * e_plus - gamma_s_ * s[j];
        }
        for (std::size_t j = 0; j < nz_; ++j) weighted_[j] = phase_[j] * s[j];
        cumulative_trapezoid(weighted_, dz_, cumulative_);
        const Complex total_minus = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) {
            const Complex e_minus = d.ein_minus + kI * sqrt_d_ * r_minus * (total_minus - cumulative_[j]);
            ds[j] += c_minus * std::conj(phase_[j]) * e_minus;
        }

        Flux f;
        f.in = gamma_e_ * (std::norm(d.ein_plus) + std::norm(d.ein_minus));
        f.out_plus = gamma_e_ * std::norm(d.ein_plus + kI * sqrt_d_ * r_plus * total_plus);
        f.out_minus = gamma_e_ * std::norm(d.ein_minus + kI * sqrt_d_ * r_minus * total_minus);
        f.decay = gamma_s_ > 0.0 ? 2.0 * gamma_s_ * norm2_trapezoid(s, dz_) : 0.0;
        return f;
    }

private:
    std::size_t nz_;
    double dz_;
    double sqrt_d_;
    double gamma_e_;
    double gamma_s_;
    double inv_delta_plus_;
    double inv_delta_minus_;
    ComplexVec phase_;
    ComplexVec weighted_;
    ComplexVec cumulative_;
};

void axpy(const ComplexVec& y, double h, const ComplexVec& k, ComplexVec& out)
{
    for (std::size_t j = 0; j < y.size(); ++j) out[j] = y[j] + h * k[j];
}

double split_time_for(const PulseShape& input, const ControlProfile& control, const Grid& grid)
{
    const double input_end = input.support().second;
    if (std::isfinite(input_end)) return input_end;
    if (!control.schedule.empty()) return control.schedule.front().t_off;
    return grid.t_end();
}

}  // namespace

SimulationResult simulate(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                          std::span<const Complex> initial_spinwave, const ControlProfile& control,
                          const MismatchSpec& mismatch, double split_time)
{
    require_valid(config, grid);
    if (config.delta_plus == 0.0 || config.delta_minus == 0.0) {
        throw ConfigError("adiabatic model needs nonzero detunings");
    }
    if (control.size() != grid.nt) {
        throw ConfigError(fmt::format("control has {} samples but the grid has nt = {}", control.size(), grid.nt));
    }
    if (initial_spinwave.size() != grid.nz) {
        throw ConfigError("initial spinwave length must equal nz");
    }
    if (!std::isfinite(mismatch.delta_k) || !std::isfinite(mismatch.global_phase)) {
        throw ConfigError("mismatch parameters must be finite");
    }

    const std::size_t nz = grid.nz;
    const double h = grid.dt;
    detail::DriveSampler drive(grid, inputs, control);
    Equations eq(config, grid, mismatch);

    ComplexVec s(initial_spinwave.begin(), initial_spinwave.end());
    ComplexVec k1(nz), k2(nz), k3(nz), k4(nz), tmp(nz);

    SimulationResult result;
    result.time.resize(grid.nt);
    result.e_out_plus.resize(grid.nt);
    result.e_out_minus.resize(grid.nt);

    Flux transmitted;
    Flux recalled;
    for (std::size_t n = 0; n + 1 < grid.nt; ++n) {
        const auto d0 = drive.at(n, 0.0);
        const auto dm = drive.at(n, 0.5);
        const auto d1 = drive.at(n, 1.0);

        result.time[n] = grid.time(n);
        std::tie(result.e_out_plus[n], result.e_out_minus[n]) = eq.outputs(s, d0);

        const Flux f1 = eq.rhs(s, d0, k1);
        axpy(s, 0.5 * h, k1, tmp);
        const Flux f2 = eq.rhs(tmp, dm, k2);
        axpy(s, 0.5 * h, k2, tmp);
        const Flux f3 = eq.rhs(tmp, dm, k3);
        axpy(s, h, k3, tmp);
        const Flux f4 = eq.rhs(tmp, d1, k4);
        for (std::size_t j = 0; j < nz; ++j) s[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);

        const Flux step = (h / 6.0) * (f1 + 2.0 * (f2 + f3) + f4);
        if (grid.time(n) + 0.5 * h <= split_time) {
            transmitted = transmitted + step;
        } else {
            recalled = recalled + step;
        }
        if (!all_finite(s)) {
            throw SolverError(fmt::format("non-finite spinwave at t = {:.6g}; time step too large", grid.time(n + 1)));
        }
    }
    const std::size_t last = grid.nt - 1;
    const auto d_last = drive.at(last - 1, 1.0);
    result.time[last] = grid.time(last);
    std::tie(result.e_out_plus[last], result.e_out_minus[last]) = eq.outputs(s, d_last);

    const double initial_energy = spinwave_energy(initial_spinwave);
    result.energy_in = transmitted.in + recalled.in;
    result.transmitted_plus = transmitted.out_plus;
    result.transmitted_minus = transmitted.out_minus;
    result.recalled_plus = recalled.out_plus;
    result.recalled_minus = recalled.out_minus;
    result.energy_transmitted = transmitted.out_plus + transmitted.out_minus;
    result.energy_recalled = recalled.out_plus + recalled.out_minus;
    result.energy_residual = spinwave_energy(s);
    const double reference = result.energy_in > 0.0 ? result.energy_in : initial_energy;
    result.efficiency = reference > 0.0 ? result.energy_recalled / reference : 0.0;

    result.final_state = FieldState::zeros(nz);
    eq.fields(s, d_last, result.final_state.e_plus, result.final_state.e_minus);
    result.final_state.s = s;
    result.spinwave_final = std::move(s);

    result.diagnostics["dt"] = h;
    result.diagnostics["nz"] = static_cast<double>(nz);
    result.diagnostics["nt"] = static_cast<double>(grid.nt);
    result.diagnostics["split_time"] = split_time;
    result.diagnostics["initial_spinwave_energy"] = initial_energy;
    result.diagnostics["decay_loss"] = transmitted.decay + recalled.decay;
    const double budget = initial_energy + result.energy_in;
    if (budget > 0.0) {
        const double balance = budget - result.energy_transmitted - result.energy_recalled -
                               result.energy_residual - (transmitted.decay + recalled.decay);
        result.diagnostics["energy_balance_error"] = balance / budget;
    }
    const Complex mean = trapezoid(std::span<const Complex>(result.spinwave_final), grid.dz());
    if (std::abs(mean) > 0.0) result.diagnostics["uniformity"] = uniformity_metric(result.spinwave_final);
    return result;
}

SimulationResult simulate_storage(const EnsembleConfig& config, const Grid& grid, const PulseShape& input,
                                  const ControlProfile& control, const MismatchSpec& mismatch)
{
    const double energy = input_energy(input, grid);
    if (!(energy > 0.0)) throw ConfigError("zero input mode: storage needs positive input energy");
    const PulseShape normalized = input.scaled(1.0 / std::sqrt(energy));

    PortInputs ports;
    ports.plus = normalized;
    ports.plus->phase = input.phase + mismatch.global_phase;
    ports.minus = normalized;
    ports.minus->phase = 0.0;

    const ComplexVec empty(grid.nz);
    auto result = simulate(config, grid, ports, empty, control, mismatch, split_time_for(input, control, grid));
    result.diagnostics["input_energy_trapezoid"] = energy;
    return result;
}

SimulationResult simulate_retrieval(const EnsembleConfig& config, const Grid& grid,
                                    std::span<const Complex> initial_spinwave, const ControlProfile& control,
                                    const MismatchSpec& mismatch)
{
    return simulate(config, grid, PortInputs{}, initial_spinwave, control, mismatch,
                    -std::numeric_limits<double>::infinity());
}

double spinwave_energy(std::span<const Complex> spinwave)
{
    if (spinwave.size() < 2) return 0.0;
    return norm2_trapezoid(spinwave, 1.0 / static_cast<double>(spinwave.size() - 1));
}

double uniformity_metric(std::span<const Complex> spinwave)
{
    if (spinwave.size() < 2) throw ConfigError("spinwave needs at least two samples");
    const Complex mean = trapezoid(spinwave, 1.0 / static_cast<double>(spinwave.size() - 1));
    if (std::abs(mean) == 0.0) throw ConfigError("zero mean spinwave");
    double worst = 0.0;
    for (const auto& v : spinwave) worst = std::max(worst, std::abs(v - mean));
    return worst / std::abs(mean);
}

double uniformity_metric(const FieldState& state)
{
    return uniformity_metric(state.s);
}

}  // namespace tracemem::adiabatic
