#include "tracemem/phase.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "tracemem/adiabatic.hpp"
#include "tracemem/parallel.hpp"

namespace tracemem::phase {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_pi(double x)
{
    x = std::remainder(x, kTwoPi);
    return x <= -M_PI ? x + kTwoPi : x;
}

std::vector<ExcitedLevel> levels_of(const EnsembleConfig& config)
{
    if (config.excited_levels.empty()) return {ExcitedLevel{0.0, 1.0}};
    return config.excited_levels;
}

template <class F>
double bracketed_root(F f, double lo, double hi)
{
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

}  // namespace

void GeometryConfig::check() const
{
    if (!(lambda_probe > 0.0) || !std::isfinite(lambda_probe)) throw ConfigError("probe wavelength must be positive");
    if (!(hyperfine_splitting >= 0.0) || !std::isfinite(hyperfine_splitting)) {
        throw ConfigError("hyperfine splitting must be nonnegative");
    }
    if (!(std::abs(theta) < 0.1)) throw ConfigError("phase-matching angle outside the small-angle regime (|theta| < 0.1)");
}

double spinwave_wavenumber(const GeometryConfig& geom, const PhysicalConstants& constants)
{
    geom.check();
    const double transverse = kTwoPi * geom.theta / geom.lambda_probe;
    const double longitudinal = kTwoPi * geom.hyperfine_splitting / constants.speed_of_light;
    return std::hypot(transverse, longitudinal);
}

double spinwave_wavelength(const GeometryConfig& geom, const PhysicalConstants& constants)
{
    const double k = spinwave_wavenumber(geom, constants);
    if (!(k > 0.0)) throw ConfigError("zero spinwave momentum: wavelength is infinite");
    return kTwoPi / k;
}

double temperature_from_gaussian_tau(double tau_g, double lambda_s, const PhysicalConstants& c)
{
    if (!(tau_g > 0.0) || !(lambda_s > 0.0)) throw ConfigError("tau_g and lambda_s must be positive");
    if (std::isinf(tau_g)) return 0.0;
    return c.atomic_mass * lambda_s * lambda_s / (c.boltzmann * kTwoPi * kTwoPi * tau_g * tau_g);
}

double gaussian_tau_from_temperature(double temperature, double lambda_s, const PhysicalConstants& c)
{
    if (!(temperature > 0.0) || !(lambda_s > 0.0)) throw ConfigError("temperature and lambda_s must be positive");
    return lambda_s / kTwoPi * std::sqrt(c.atomic_mass / (c.boltzmann * temperature));
}

double dispersive_phase(const EnsembleConfig& config, double delta)
{
    double sum = 0.0;
    for (const auto& l : levels_of(config)) {
        const double detuning = delta - l.offset;
        if (detuning == 0.0) throw ConfigError(fmt::format("probe resonant with the excited level at {:.6g}", l.offset));
        sum += l.strength / detuning;
    }
    return -0.5 * config.optical_depth * config.gamma_e * sum;
}

double dispersion_mismatch(const EnsembleConfig& config)
{
    return dispersive_phase(config, config.delta_plus) + dispersive_phase(config, config.delta_minus);
}

double dispersion_phase_offset(const EnsembleConfig& config)
{
    return std::fmod(std::abs(dispersion_mismatch(config)), kTwoPi);
}

EnsembleConfig d1_config(double optical_depth, double detuning_mhz, double strength_ratio)
{
    EnsembleConfig c;
    c.optical_depth = optical_depth;
    c.gamma_e = 1.0;
    c.delta_plus = detuning_mhz / kD1Linewidth;
    c.delta_minus = -c.delta_plus;
    c.excited_levels = {{0.0, 1.0}, {kD1ExcitedSplitting / kD1Linewidth, strength_ratio}};
    return c;
}

double calibrate_strength_ratio(double optical_depth, double detuning_mhz, double target_offset)
{
    if (!(target_offset > 0.0 && target_offset < M_PI)) throw ConfigError("target offset must lie in (0, pi)");
    auto f = [&](double r) { return std::abs(dispersion_mismatch(d1_config(optical_depth, detuning_mhz, r))) - target_offset; };
    double hi = 1.0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw ConfigError("strength ratio calibration has no solution");
    }
    // Stay on the first branch: shrink hi while the offset exceeds pi.
    while (f(hi) + target_offset > M_PI && f(0.5 * hi) > 0.0) hi *= 0.5;
    return bracketed_root(f, 0.0, hi);
}

DetuningCorrection correct_detuning(const EnsembleConfig& config)
{
    const double target = -config.delta_plus;
    auto f = [&](double dm) {
        EnsembleConfig c = config;
        c.delta_minus = dm;
        return dispersion_mismatch(c);
    };
    // Widen the bracket around -delta+ without crossing a level.
    std::vector<double> poles;
    for (const auto& l : levels_of(config)) poles.push_back(l.offset);
    double lo_lim = -INFINITY, hi_lim = INFINITY;
    for (double p : poles) {
        if (p < target) lo_lim = std::max(lo_lim, p);
        if (p > target) hi_lim = std::min(hi_lim, p);
        if (p == target) throw ConfigError("probe resonant with an excited level");
    }
    double w = 1e-3 * std::max(1.0, std::abs(target));
    double lo = target - w, hi = target + w;
    while (f(lo) * f(hi) > 0.0) {
        w *= 2.0;
        lo = std::max(target - w, 0.5 * (lo + lo_lim));
        hi = std::min(target + w, 0.5 * (hi + hi_lim));
        if (w > 1e6) throw SolverError("no detuning adjustment cancels the dispersion mismatch");
    }
    DetuningCorrection out;
    out.delta_plus = config.delta_plus;
    out.delta_minus = f(lo) == 0.0 ? lo : (f(hi) == 0.0 ? hi : bracketed_root(f, lo, hi));
    out.adjustment = out.delta_minus - target;
    EnsembleConfig c = config;
    c.delta_minus = out.delta_minus;
    out.residual_offset = std::abs(wrap_pi(dispersion_mismatch(c)));
    return out;
}

FringeResponse fringe_response(const EnsembleConfig& config, const Grid& grid, const PulseShape& input,
                               const ControlProfile& control, double delta_k, std::size_t phase_points)
{
    if (phase_points < 3) throw ConfigError("a fringe scan needs at least three phases");
    std::vector<double> phases(phase_points);
    std::array<std::vector<double>, stats::kChannels> energy;
    double e_in = 0.0;
    for (std::size_t m = 0; m < phase_points; ++m) {
        phases[m] = kTwoPi * static_cast<double>(m) / static_cast<double>(phase_points);
        const auto r = adiabatic::simulate_storage(config, grid, input, control, {delta_k, phases[m]});
        energy[stats::forward_transmitted].push_back(r.transmitted_plus);
        energy[stats::backward_transmitted].push_back(r.transmitted_minus);
        energy[stats::forward_recalled].push_back(r.recalled_plus);
        energy[stats::backward_recalled].push_back(r.recalled_minus);
        e_in = r.energy_in;
    }
    FringeResponse out;
    out.input_energy = e_in;
    for (int c = 0; c < stats::kChannels; ++c) out.channels[c] = stats::fit_sinusoid(phases, energy[c]);
    return out;
}

std::vector<MismatchRow> mismatch_fringe_sweep(const EnsembleConfig& config, const Grid& grid,
                                               const PulseShape& input, const ControlProfile& control,
                                               std::vector<double> delta_k, std::size_t phase_points, unsigned jobs)
{
    if (delta_k.empty()) throw ConfigError("empty delta_k sweep");
    for (double v : delta_k) {
        if (!std::isfinite(v)) throw ConfigError("non-finite delta_k in sweep");
    }
    std::sort(delta_k.begin(), delta_k.end());
    auto rows = parallel_map(delta_k.size(), jobs, [&](std::size_t i) {
        MismatchRow row;
        row.delta_k = delta_k[i];
        try {
            const auto f = fringe_response(config, grid, input, control, delta_k[i], phase_points);
            const auto& ch = f.channels;
            if (ch[stats::forward_transmitted].amplitude <= 0.0 || ch[stats::forward_recalled].amplitude <= 0.0) {
                throw FitError("zero-amplitude fringe");
            }
            row.transmitted_offset =
                wrap_pi(ch[stats::forward_transmitted].phase - ch[stats::backward_transmitted].phase);
            row.recalled_offset = wrap_pi(ch[stats::forward_recalled].phase - ch[stats::backward_recalled].phase);
            // Total recall fringe: the sum of two sinusoids is a sinusoid.
            const auto& a = ch[stats::forward_recalled];
            const auto& b = ch[stats::backward_recalled];
            const double cc = a.amplitude * std::cos(a.phase) + b.amplitude * std::cos(b.phase);
            const double ss = a.amplitude * std::sin(a.phase) + b.amplitude * std::sin(b.phase);
            row.max_efficiency = (a.offset + b.offset + std::hypot(cc, ss)) / f.input_energy;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    });

    // Continue the offsets through +-pi outward from the row nearest zero.
    std::size_t origin = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (std::abs(rows[i].delta_k) < std::abs(rows[origin].delta_k)) origin = i;
    }
    auto unwrap = [&](auto member) {
        for (int dir : {+1, -1}) {
            double prev = NAN;
            for (auto i = static_cast<std::ptrdiff_t>(origin); i >= 0 && i < static_cast<std::ptrdiff_t>(rows.size()); i += dir) {
                auto& row = rows[static_cast<std::size_t>(i)];
                if (!row.error.empty()) continue;
                double& v = row.*member;
                if (!std::isnan(prev)) v = prev + wrap_pi(v - prev);
                prev = v;
            }
        }
    };
    unwrap(&MismatchRow::transmitted_offset);
    unwrap(&MismatchRow::recalled_offset);
    return rows;
}

stats::FringeDataset synthetic_fringe_train(const FringeResponse& response, const FringeTrainSpec& spec,
                                            std::uint64_t seed)
{
    if (spec.runs < 1 || spec.pulses < 3) throw ConfigError("fringe train needs at least one run of three pulses");
    if (!(spec.noise >= 0.0)) throw ConfigError("fringe train noise must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    std::normal_distribution<double> normal(0.0, 1.0);
    stats::FringeDataset d;
    for (std::size_t r = 0; r < spec.runs; ++r) {
        const double theta = uniform(rng);
        for (std::size_t k = 0; k < spec.pulses; ++k) {
            const double phi = spec.phase_step * static_cast<double>(k);
            d.run_id.push_back(static_cast<int>(r));
            d.pulse_index.push_back(static_cast<int>(k));
            d.imposed_phase.push_back(phi);
            for (int c = 0; c < stats::kChannels; ++c) {
                const auto& s = response.channels[c];
                const double clean = s.offset + s.amplitude * std::cos(theta + phi - s.phase);
                const double noisy = clean + spec.noise * s.amplitude * normal(rng);
                d.energies[c].push_back(std::max(0.0, noisy));
            }
        }
    }
    return d;
}

}  // namespace tracemem::phase
