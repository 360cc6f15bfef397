#include "tracemem/three_level.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "drive.hpp"

namespace tracemem::three_level {

namespace {

struct Flux {
    double in = 0.0;
    double out_plus = 0.0;
    double out_minus = 0.0;
    double excited_loss = 0.0;
    double spinwave_loss = 0.0;
};

Flux operator+(Flux a, const Flux& b)
{
    return {a.in + b.in, a.out_plus + b.out_plus, a.out_minus + b.out_minus,
            a.excited_loss + b.excited_loss, a.spinwave_loss + b.spinwave_loss};
}

Flux operator*(double c, Flux a)
{
    return {c * a.in, c * a.out_plus, c * a.out_minus, c * a.excited_loss, c * a.spinwave_loss};
}

struct State {
    ComplexVec s, pp, pm;

    explicit State(std::size_t nz = 0) : s(nz), pp(nz), pm(nz) {}
};

double energy_of(const State& y, double dz)
{
    return norm2_trapezoid(y.s, dz) + norm2_trapezoid(y.pp, dz) + norm2_trapezoid(y.pm, dz);
}

class Equations {
public:
    Equations(const EnsembleConfig& config, const Grid& grid)
        : nz_(grid.nz),
          dz_(grid.dz()),
          sqrt_d_(std::sqrt(config.optical_depth)),
          gamma_e_(config.gamma_e),
          gamma_s_(config.gamma_s),
          backward_sign_(config.delta_plus * config.delta_minus > 0.0 ? 1.0 : -1.0),
          cumulative_(grid.nz)
    {
    }

    std::pair<Complex, Complex> outputs(const State& y, const detail::StageDrive& d) const
    {
        return {d.ein_plus + kI * sqrt_d_ * trapezoid(std::span<const Complex>(y.pp), dz_),
                d.ein_minus + kI * sqrt_d_ * trapezoid(std::span<const Complex>(y.pm), dz_)};
    }

    void fields(const State& y, const detail::StageDrive& d, ComplexVec& e_plus, ComplexVec& e_minus)
    {
        cumulative_trapezoid(y.pp, dz_, cumulative_);
        for (std::size_t j = 0; j < nz_; ++j) e_plus[j] = d.ein_plus + kI * sqrt_d_ * cumulative_[j];
        cumulative_trapezoid(y.pm, dz_, cumulative_);
        const Complex total = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) e_minus[j] = d.ein_minus + kI * sqrt_d_ * (total - cumulative_[j]);
    }

    // Non-linear-decay part of the right-hand side.
    Flux rhs(const State& y, const detail::StageDrive& d, State& k)
    {
        const Complex omega_plus = d.omega;
        const Complex omega_minus = backward_sign_ * d.omega;
        const Complex feed = kI * sqrt_d_ * gamma_e_;

        cumulative_trapezoid(y.pp, dz_, cumulative_);
        const Complex total_plus = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) {
            const Complex e_plus = d.ein_plus + kI * sqrt_d_ * cumulative_[j];
            k.pp[j] = kI * omega_plus * y.s[j] + feed * e_plus;
        }
        cumulative_trapezoid(y.pm, dz_, cumulative_);
        const Complex total_minus = cumulative_.back();
        for (std::size_t j = 0; j < nz_; ++j) {
            const Complex e_minus = d.ein_minus + kI * sqrt_d_ * (total_minus - cumulative_[j]);
            k.pm[j] = kI * omega_minus * y.s[j] + feed * e_minus;
        }
        const Complex cp = kI * std::conj(omega_plus);
        const Complex cm = kI * std::conj(omega_minus);
        for (std::size_t j = 0; j < nz_; ++j) k.s[j] = cp * y.pp[j] + cm * y.pm[j] - gamma_s_ * y.s[j];

        Flux f;
        f.in = gamma_e_ * (std::norm(d.ein_plus) + std::norm(d.ein_minus));
        f.out_plus = gamma_e_ * std::norm(d.ein_plus + kI * sqrt_d_ * total_plus);
        f.out_minus = gamma_e_ * std::norm(d.ein_minus + kI * sqrt_d_ * total_minus);
        f.excited_loss = 2.0 * gamma_e_ * (norm2_trapezoid(y.pp, dz_) + norm2_trapezoid(y.pm, dz_));
        f.spinwave_loss = gamma_s_ > 0.0 ? 2.0 * gamma_s_ * norm2_trapezoid(y.s, dz_) : 0.0;
        return f;
    }

private:
    std::size_t nz_;
    double dz_;
    double sqrt_d_;
    double gamma_e_;
    double gamma_s_;
    double backward_sign_;
    ComplexVec cumulative_;
};

// Exact propagator of the -(Gamma + i Delta) decay of the coherences.
struct Decay {
    Complex plus;
    Complex minus;

    Decay(const EnsembleConfig& c, double tau)
        : plus(std::exp(-Complex(c.gamma_e, c.delta_plus) * tau)),
          minus(std::exp(-Complex(c.gamma_e, c.delta_minus) * tau))
    {
    }

    void apply(State& y) const
    {
        for (auto& v : y.pp) v *= plus;
        for (auto& v : y.pm) v *= minus;
    }
};

// out = decay(y + h * k)
void stage(const State& y, double h, const State& k, const Decay* decay, State& out)
{
    for (std::size_t j = 0; j < y.s.size(); ++j) {
        out.s[j] = y.s[j] + h * k.s[j];
        out.pp[j] = y.pp[j] + h * k.pp[j];
        out.pm[j] = y.pm[j] + h * k.pm[j];
    }
    if (decay) decay->apply(out);
}

double asymmetry(const State& y, double dz)
{
    ComplexVec diff(y.pp.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = y.pp[j] - y.pm[j];
    const double denom = std::sqrt(norm2_trapezoid(y.pp, dz)) + std::sqrt(norm2_trapezoid(y.pm, dz));
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(norm2_trapezoid(diff, dz)) / denom;
}

double max_omega(const ControlProfile& control)
{
    double m = 0.0;
    for (const auto& v : control.omega) m = std::max(m, std::abs(v));
    return m;
}

int choose_substeps(const EnsembleConfig& config, const Grid& grid, const ControlProfile& control,
                    const SolverOptions& options)
{
    const double rate = config.gamma_e * (1.0 + config.optical_depth) + max_omega(control);
    const double stiffness = grid.dt * rate;
    if (stiffness <= options.stability_limit) return 1;
    if (!options.auto_substep) {
        throw SolverError(fmt::format(
            "insufficient dt for the excited-state decay: dt * Gamma * (1 + d) = {:.3g} exceeds {:.3g}",
            stiffness, options.stability_limit));
    }
    return static_cast<int>(std::ceil(stiffness / options.stability_limit));
}

FullRun run_once(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                 const FieldState& initial, const ControlProfile& control, double split_time, int substeps)
{
    const std::size_t nz = grid.nz;
    const double dz = grid.dz();
    detail::DriveSampler drive(grid, inputs, control);
    Equations eq(config, grid);

    State y(nz);
    y.s = initial.s;
    if (!initial.p_plus.empty()) y.pp = initial.p_plus;
    if (!initial.p_minus.empty()) y.pm = initial.p_minus;

    const double h = grid.dt / substeps;
    const Decay half(config, 0.5 * h);
    const Decay full(config, h);

    FullRun run;
    run.substeps = substeps;
    run.initial_energy = energy_of(y, dz);
    auto& result = run.result;
    result.time.resize(grid.nt);
    result.e_out_plus.resize(grid.nt);
    result.e_out_minus.resize(grid.nt);
    run.coherence_asymmetry.resize(grid.nt);

    State k1(nz), k2(nz), k3(nz), k4(nz), tmp(nz), base(nz), scratch(nz);
    Flux transmitted;
    Flux recalled;
    for (std::size_t n = 0; n + 1 < grid.nt; ++n) {
        result.time[n] = grid.time(n);
        std::tie(result.e_out_plus[n], result.e_out_minus[n]) = eq.outputs(y, drive.at(n, 0.0));
        run.coherence_asymmetry[n] = asymmetry(y, dz);

        Flux step;
        for (int m = 0; m < substeps; ++m) {
            const double frac0 = static_cast<double>(m) / substeps;
            const double frac_mid = (m + 0.5) / substeps;
            const double frac1 = static_cast<double>(m + 1) / substeps;
            const auto d0 = drive.at(n, frac0);
            const auto dm = drive.at(n, frac_mid);
            const auto d1 = drive.at(n, frac1);

            // Lawson RK4 with the coherence decay factored out:
            //   k1 = N(y)
            //   k2 = N(D(h/2) (y + h/2 k1))
            //   k3 = N(D(h/2) y + h/2 k2)
            //   k4 = N(D(h) y + h D(h/2) k3)
            //   y' = D(h) y + h/6 [D(h) k1 + 2 D(h/2) (k2 + k3) + k4]
            const Flux f1 = eq.rhs(y, d0, k1);
            stage(y, 0.5 * h, k1, &half, tmp);
            const Flux f2 = eq.rhs(tmp, dm, k2);
            base = y;
            half.apply(base);
            stage(base, 0.5 * h, k2, nullptr, tmp);
            const Flux f3 = eq.rhs(tmp, dm, k3);
            scratch = k3;
            half.apply(scratch);
            base = y;
            full.apply(base);
            stage(base, h, scratch, nullptr, tmp);
            const Flux f4 = eq.rhs(tmp, d1, k4);

            full.apply(k1);
            for (std::size_t j = 0; j < nz; ++j) {
                scratch.s[j] = k2.s[j] + k3.s[j];
                scratch.pp[j] = k2.pp[j] + k3.pp[j];
                scratch.pm[j] = k2.pm[j] + k3.pm[j];
            }
            half.apply(scratch);
            for (std::size_t j = 0; j < nz; ++j) {
                y.s[j] = base.s[j] + h / 6.0 * (k1.s[j] + 2.0 * scratch.s[j] + k4.s[j]);
                y.pp[j] = base.pp[j] + h / 6.0 * (k1.pp[j] + 2.0 * scratch.pp[j] + k4.pp[j]);
                y.pm[j] = base.pm[j] + h / 6.0 * (k1.pm[j] + 2.0 * scratch.pm[j] + k4.pm[j]);
            }
            // The flux integrands carry no decay factor of their own: plain RK4 weights.
            step = step + (h / 6.0) * (f1 + 2.0 * (f2 + f3) + f4);
        }
        if (grid.time(n) + 0.5 * grid.dt <= split_time) {
            transmitted = transmitted + step;
        } else {
            recalled = recalled + step;
        }
        if (!all_finite(y.s) || !all_finite(y.pp) || !all_finite(y.pm)) {
            throw SolverError(fmt::format("non-finite state at t = {:.6g}", grid.time(n + 1)));
        }
    }
    const std::size_t last = grid.nt - 1;
    const auto d_last = drive.at(last - 1, 1.0);
    result.time[last] = grid.time(last);
    std::tie(result.e_out_plus[last], result.e_out_minus[last]) = eq.outputs(y, d_last);
    run.coherence_asymmetry[last] = asymmetry(y, dz);

    result.energy_in = transmitted.in + recalled.in;
    result.transmitted_plus = transmitted.out_plus;
    result.transmitted_minus = transmitted.out_minus;
    result.recalled_plus = recalled.out_plus;
    result.recalled_minus = recalled.out_minus;
    result.energy_transmitted = transmitted.out_plus + transmitted.out_minus;
    result.energy_recalled = recalled.out_plus + recalled.out_minus;
    run.excited_loss = transmitted.excited_loss + recalled.excited_loss;
    run.spinwave_loss = transmitted.spinwave_loss + recalled.spinwave_loss;
    run.remaining_energy = energy_of(y, dz);
    result.energy_residual = run.remaining_energy;

    const double budget = run.initial_energy + result.energy_in;
    if (budget > 0.0) {
        run.ledger_error = (budget - result.energy_transmitted - result.energy_recalled - run.excited_loss -
                            run.spinwave_loss - run.remaining_energy) /
                           budget;
    }

    result.final_state = FieldState::zeros(nz, true);
    eq.fields(y, d_last, result.final_state.e_plus, result.final_state.e_minus);
    result.final_state.s = y.s;
    result.final_state.p_plus = y.pp;
    result.final_state.p_minus = y.pm;
    result.spinwave_final = y.s;

    result.diagnostics["substeps"] = substeps;
    result.diagnostics["dt"] = grid.dt;
    result.diagnostics["initial_energy"] = run.initial_energy;
    result.diagnostics["excited_loss"] = run.excited_loss;
    result.diagnostics["spinwave_loss"] = run.spinwave_loss;
    result.diagnostics["remaining_fraction"] = run.initial_energy > 0.0 ? run.remaining_energy / run.initial_energy : 0.0;
    result.diagnostics["ledger_error"] = run.ledger_error;
    return run;
}

void set_efficiency(FullRun& run, bool storage)
{
    auto& r = run.result;
    if (storage) {
        const double stored = norm2_trapezoid(r.spinwave_final, 1.0 / static_cast<double>(r.spinwave_final.size() - 1));
        r.efficiency = r.energy_in > 0.0 ? stored / r.energy_in : 0.0;
        r.diagnostics["stored_spinwave_energy"] = stored;
    } else {
        r.efficiency = run.initial_energy > 0.0 ? r.energy_recalled / run.initial_energy : 0.0;
    }
}

}  // namespace

FullRun simulate_full(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                      const FieldState& initial, const ControlProfile& control, double split_time,
                      const SolverOptions& options)
{
    require_valid(config, grid);
    if (control.size() != grid.nt) {
        throw ConfigError(fmt::format("control has {} samples but the grid has nt = {}", control.size(), grid.nt));
    }
    if (initial.s.size() != grid.nz) throw ConfigError("initial spinwave length must equal nz");
    if ((!initial.p_plus.empty() && initial.p_plus.size() != grid.nz) ||
        (!initial.p_minus.empty() && initial.p_minus.size() != grid.nz)) {
        throw ConfigError("initial coherence length must equal nz");
    }

    int substeps = choose_substeps(config, grid, control, options);
    FullRun run = run_once(config, grid, inputs, initial, control, split_time, substeps);
    if (options.verify_convergence) {
        auto efficiency_of = [](const FullRun& r) {
            const double ref = r.result.energy_in > 0.0 ? r.result.energy_in : r.initial_energy;
            return ref > 0.0 ? (r.result.energy_recalled + r.result.energy_transmitted) / ref : 0.0;
        };
        for (int i = 0; i < options.max_halvings; ++i) {
            FullRun finer = run_once(config, grid, inputs, initial, control, split_time, 2 * substeps);
            const double change = std::abs(efficiency_of(finer) - efficiency_of(run));
            substeps *= 2;
            run = std::move(finer);
            run.result.diagnostics["convergence_change"] = change;
            if (change < options.convergence_tolerance) break;
        }
    }
    return run;
}

FullRun simulate_retrieval_full(const EnsembleConfig& config, const Grid& grid,
                                std::span<const Complex> initial_spinwave, const ControlProfile& control,
                                const SolverOptions& options)
{
    FieldState initial = FieldState::zeros(grid.nz, true);
    if (initial_spinwave.size() != grid.nz) throw ConfigError("initial spinwave length must equal nz");
    initial.s.assign(initial_spinwave.begin(), initial_spinwave.end());
    FullRun run = simulate_full(config, grid, PortInputs{}, initial, control,
                                -std::numeric_limits<double>::infinity(), options);
    set_efficiency(run, false);
    return run;
}

FullRun simulate_storage_full(const EnsembleConfig& config, const Grid& grid, const PortInputs& inputs,
                              const ControlProfile& control, const SolverOptions& options)
{
    FieldState initial = FieldState::zeros(grid.nz, true);
    FullRun run = simulate_full(config, grid, inputs, initial, control, grid.t_end(), options);
    set_efficiency(run, true);
    return run;
}

FullRun complete_retrieval(const EnsembleConfig& config, std::span<const Complex> initial_spinwave,
                           double omega, double dt, double max_time, double completion_threshold,
                           const SolverOptions& options)
{
    if (!(dt > 0.0) || !(max_time > 0.0)) throw ConfigError("retrieval needs positive dt and max_time");
    const double ratio = omega / config.delta_plus;
    const double rate = (config.optical_depth + 2.0) * config.gamma_e * ratio * ratio;
    // Initial guess: enough time for the excitation to fall to the threshold.
    double duration = rate > 0.0 ? std::max(10.0 * dt, 1.2 * std::log(1.0 / completion_threshold) / (2.0 * rate)) : max_time;
    duration = std::min(duration, max_time);
    while (true) {
        const auto nt = static_cast<std::size_t>(std::ceil(duration / dt)) + 1;
        Grid grid;
        grid.nz = initial_spinwave.size();
        grid.nt = nt;
        grid.dt = dt;
        grid.t0 = 0.0;
        const auto control = ControlProfile::constant(grid, omega, {{0.0, grid.t_end()}});
        FullRun run = simulate_retrieval_full(config, grid, initial_spinwave, control, options);
        const double remaining = run.initial_energy > 0.0 ? run.remaining_energy / run.initial_energy : 0.0;
        if (remaining < completion_threshold) return run;
        if (duration >= max_time) {
            throw SolverError(fmt::format("retrieval incomplete after t = {:.4g} (remaining fraction {:.3g})",
                                          duration, remaining));
        }
        duration = std::min(2.0 * duration, max_time);
    }
}

PortInputs time_reversed_inputs(const SimulationResult& retrieval, bool conjugate)
{
    const auto& t = retrieval.time;
    if (t.size() < 2) throw ConfigError("retrieval record too short to reverse");
    const double dt = t[1] - t[0];
    auto reversed = [&](const ComplexVec& v) {
        SampledPulse p;
        p.t0 = t.front();
        p.dt = dt;
        p.values.resize(v.size());
        for (std::size_t n = 0; n < v.size(); ++n) {
            const Complex x = v[v.size() - 1 - n];
            p.values[n] = conjugate ? std::conj(x) : x;
        }
        return PulseShape{p, 0.0};
    };
    PortInputs in;
    in.minus = reversed(retrieval.e_out_plus);
    in.plus = reversed(retrieval.e_out_minus);
    return in;
}

ControlProfile time_reversed_control(const ControlProfile& control, bool conjugate)
{
    ControlProfile out = control;
    std::reverse(out.omega.begin(), out.omega.end());
    if (conjugate) {
        for (auto& v : out.omega) v = std::conj(v);
    }
    const double a = control.t0;
    const double b = control.t_end();
    for (auto& w : out.schedule) w = {a + b - w.t_off, a + b - w.t_on};
    return out;
}

bool reversal_conjugates(const EnsembleConfig& config)
{
    if (config.delta_plus == config.delta_minus) return true;
    if (config.delta_plus == -config.delta_minus) return false;
    throw ConfigError("time reversal needs |delta+| == |delta-|");
}

double adiabatic_residual(const FullRun& run)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : run.coherence_asymmetry) {
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
    }
    if (count == 0) throw ConfigError("zero coherences: adiabatic residual undefined");
    return sum / static_cast<double>(count);
}

RoundTrip optimal_round_trip(const EnsembleConfig& config, std::span<const Complex> seed_spinwave,
                             double omega, double dt, double max_time, int iterations,
                             const SolverOptions& options)
{
    const std::size_t nz = seed_spinwave.size();
    const double dz = 1.0 / static_cast<double>(nz - 1);
    auto normalized = [dz](ComplexVec s) {
        const double e = norm2_trapezoid(s, dz);
        if (!(e > 0.0)) throw SolverError("spinwave vanished during round-trip iteration");
        for (auto& v : s) v /= std::sqrt(e);
        return s;
    };

    const bool conjugate = reversal_conjugates(config);
    ComplexVec s = normalized(ComplexVec(seed_spinwave.begin(), seed_spinwave.end()));
    RoundTrip out;
    for (int it = 0; it <= iterations; ++it) {
        // Retrieve the mode that the time-reversed storage writes back onto s.
        ComplexVec source = s;
        if (conjugate) {
            for (auto& v : source) v = std::conj(v);
        }
        FullRun retrieval = complete_retrieval(config, source, omega, dt, max_time, 1e-6, options);
        const Grid grid{nz, retrieval.result.time.size(), dt, 0.0};
        const auto control = ControlProfile::constant(grid, omega, {{0.0, grid.t_end()}});
        FullRun storage = simulate_storage_full(config, grid, time_reversed_inputs(retrieval.result, conjugate),
                                                time_reversed_control(control, conjugate), options);
        out.storage_efficiency = storage.result.efficiency;
        s = normalized(storage.result.spinwave_final);
    }
    FullRun retrieval = complete_retrieval(config, s, omega, dt, max_time, 1e-6, options);
    out.retrieval_efficiency = retrieval.result.efficiency;
    out.total_efficiency = out.storage_efficiency * out.retrieval_efficiency;
    out.spinwave = std::move(s);
    return out;
}

ComplexVec dispersion_matched_spinwave(const EnsembleConfig& config, std::size_t nz)
{
    if (nz < 2) throw ConfigError("spinwave grid needs at least two points");
    const double g = config.gamma_e;
    const double delta = config.delta_plus;
    const double kappa = config.optical_depth * g * delta / (g * g + delta * delta);
    ComplexVec s(nz);
    for (std::size_t j = 0; j < nz; ++j) s[j] = std::polar(1.0, kappa * static_cast<double>(j) / static_cast<double>(nz - 1));
    return s;
}

ReducedRetrieval reduced_retrieval(const EnsembleConfig& config, std::span<const Complex> initial_spinwave,
                                   Complex omega)
{
    const std::size_t nz = initial_spinwave.size();
    if (nz < 2) throw ConfigError("spinwave grid needs at least two points");
    const double d = config.optical_depth;
    const double g = config.gamma_e;
    const double sign = config.delta_plus * config.delta_minus < 0.0 ? -1.0 : 1.0;
    const Complex om_p = omega;
    const Complex om_m = sign * omega;
    const double dz = 1.0 / static_cast<double>(nz - 1);

    std::vector<double> emitted(nz), scattered(nz), dephased(nz), initial(nz);
    for (std::size_t j = 0; j < nz; ++j) {
        const double z = static_cast<double>(j) * dz;
        // y = (S, P+, P-), y' = A y
        Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
        a(0, 0) = -config.gamma_s;
        a(0, 1) = kI * std::conj(om_p);
        a(0, 2) = kI * std::conj(om_m);
        a(1, 0) = kI * om_p;
        a(1, 1) = -(g * (1.0 + d * z) + kI * config.delta_plus);
        a(2, 0) = kI * om_m;
        a(2, 2) = -(g * (1.0 + d * (1.0 - z)) + kI * config.delta_minus);
        // int_0^inf y^H Q y dt = y0^H X y0 with A^H X + X A = -Q.
        Eigen::Matrix<Complex, 9, 9> l;
        const Eigen::Matrix3cd ah = a.adjoint();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                for (int k = 0; k < 3; ++k)
                    for (int m = 0; m < 3; ++m)
                        l(r * 3 + c, k * 3 + m) = (c == m ? ah(r, k) : Complex{}) + (r == k ? a(m, c) : Complex{});
        const Eigen::PartialPivLU<Eigen::Matrix<Complex, 9, 9>> lu(l);
        auto integral = [&](const Eigen::Vector3d& weights) {
            Eigen::Matrix<Complex, 9, 1> q = Eigen::Matrix<Complex, 9, 1>::Zero();
            for (int k = 0; k < 3; ++k) q(k * 3 + k) = -weights(k);
            const Eigen::Matrix<Complex, 9, 1> x = lu.solve(q);
            return std::real(x(0)) * std::norm(initial_spinwave[j]);
        };
        emitted[j] = integral({0.0, 2.0 * d * g * z, 2.0 * d * g * (1.0 - z)});
        scattered[j] = integral({0.0, 2.0 * g, 2.0 * g});
        dephased[j] = integral({2.0 * config.gamma_s, 0.0, 0.0});
        initial[j] = std::norm(initial_spinwave[j]);
    }
    const double e0 = trapezoid(initial, dz);
    if (!(e0 > 0.0)) throw ConfigError("zero initial spinwave");
    if (!(std::abs(omega) > 0.0)) throw ConfigError("reduced retrieval needs a nonzero control");
    return {trapezoid(emitted, dz) / e0, trapezoid(scattered, dz) / e0, trapezoid(dephased, dz) / e0};
}

}  // namespace tracemem::three_level
