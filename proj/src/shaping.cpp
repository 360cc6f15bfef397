#include "tracemem/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tracemem/adiabatic.hpp"

namespace tracemem::shaping {

namespace {

// int_{-inf}^{t} |E|^p dt' for the part of the pulse before t (p = 1 or 2).
struct LeadingIntegral {
    double t;
    int p;

    double operator()(const RisingExponential& e) const
    {
        if (!(e.rate > 0.0)) throw ConfigError("rising exponential needs a positive rate");
        const double tt = std::min(t, e.cutoff);
        return std::pow(std::abs(e.amplitude), p) * std::exp(p * e.rate * (tt - e.cutoff)) / (p * e.rate);
    }
    double operator()(const GaussianPulse& g) const
    {
        // |E|^p = |A|^p exp(-p (t - c)^2 / (2 w^2))
        const double s = g.width / std::sqrt(static_cast<double>(p));
        return std::pow(std::abs(g.amplitude), p) * s * std::sqrt(M_PI / 2.0) *
               std::erfc((g.center - t) / (s * std::sqrt(2.0)));
    }
    double operator()(const SampledPulse& s) const
    {
        double acc = 0.0;
        for (std::size_t n = 0; n + 1 < s.values.size(); ++n) {
            const double a = s.t0 + s.dt * static_cast<double>(n);
            if (a >= t) break;
            const double b = std::min(a + s.dt, t);
            const double fa = std::pow(std::abs(s.values[n]), p);
            const double fb = std::pow(std::abs(s.values[n + 1]), p);
            const double fb_t = fa + (fb - fa) * (b - a) / s.dt;
            acc += 0.5 * (fa + fb_t) * (b - a);
        }
        return acc;
    }
};

double leading_integral(const PulseShape& input, double t, int p)
{
    return std::visit(LeadingIntegral{t, p}, input.kind);
}

}  // namespace

const char* to_string(ClosedForm form)
{
    switch (form) {
    case ClosedForm::squared_integrand: return "squared_integrand";
    case ClosedForm::linear_integrand: return "linear_integrand";
    }
    return "unknown";
}

ShapingResult shape_control(const EnsembleConfig& config, const Grid& grid, const PulseShape& input,
                            const ShapingOptions& options)
{
    if (!(config.optical_depth > 0.0)) throw ConfigError("control shaping needs a positive optical depth");
    if (config.delta_plus == 0.0) throw ConfigError("control shaping needs a nonzero detuning");
    if (grid.nt < 2) throw ConfigError("grid needs at least two time samples");

    const int p = options.form == ClosedForm::squared_integrand ? 2 : 1;
    const double dg = config.optical_depth * config.gamma_e;
    const double delta = config.delta_plus;
    const auto [lo, hi] = input.support();
    const double t_stop = std::min(hi, grid.t_end());

    std::vector<double> mag(grid.nt, 0.0);
    std::vector<double> arg(grid.nt, 0.0);
    for (std::size_t n = 0; n < grid.nt; ++n) {
        const double t = grid.time(n);
        if (t < lo || t > t_stop) continue;
        const Complex e = input.envelope(t);
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) throw ConfigError("non-finite input envelope");
        mag[n] = std::abs(e);
        arg[n] = std::arg(e);
    }

    // Running integral of |E|^p from -inf, seeded with the part before the grid.
    std::vector<double> running(grid.nt, 0.0);
    running[0] = grid.t0 > lo ? leading_integral(input, grid.t0, p) : 0.0;
    for (std::size_t n = 1; n < grid.nt; ++n) {
        running[n] = running[n - 1] + 0.5 * grid.dt * (std::pow(mag[n - 1], p) + std::pow(mag[n], p));
    }
    const double total = running.back();
    if (!(total > 0.0)) throw ConfigError("zero input mode: the control denominator vanishes");

    const double omega_cap = std::abs(delta) * std::sqrt(options.bandwidth_limit / dg);
    ControlProfile control;
    control.t0 = grid.t0;
    control.dt = grid.dt;
    control.omega.assign(grid.nt, Complex{});
    control.schedule = {{grid.t0, t_stop}};

    std::size_t ref = grid.nt;
    double max_rate = 0.0;
    for (std::size_t n = 0; n < grid.nt; ++n) {
        if (grid.time(n) > t_stop) break;
        double om = omega_cap;
        if (running[n] > 0.0) {
            om = p == 2 ? std::abs(delta) / std::sqrt(2.0 * dg) * mag[n] / std::sqrt(running[n])
                        : std::abs(delta) * std::sqrt(mag[n] / (2.0 * dg * running[n]));
        }
        if (running[n] < options.onset_fraction * total) om = std::min(om, omega_cap);
        if (ref == grid.nt && mag[n] > 0.0) ref = n;
        const double phase = ref < grid.nt ? arg[n] - arg[ref] : 0.0;
        control.omega[n] = std::polar(om, phase);
        max_rate = std::max(max_rate, dg * om * om / (delta * delta));
    }
    if (max_rate * grid.dt > options.max_rate_step) {
        throw ConfigError(fmt::format("grid too coarse to resolve the control near onset (rate * dt = {:.3g} > {:.3g})",
                                      max_rate * grid.dt, options.max_rate_step));
    }

    ShapingResult result;
    result.omega = std::move(control);
    result.closed_form_used = options.form;
    result.residual_output_fraction = std::numeric_limits<double>::quiet_NaN();
    if (options.validate) {
        const auto run = adiabatic::simulate_storage(config, grid, input, result.omega);
        result.residual_output_fraction = std::max(0.0, run.energy_transmitted / run.energy_in);
    }
    return result;
}

ComplexVec output_prediction(const EnsembleConfig& config, const PulseShape& input, const ControlProfile& control,
                             PredictionRate rate)
{
    if (config.delta_plus == 0.0) throw ConfigError("output prediction needs a nonzero detuning");
    const double c = rate == PredictionRate::validated ? 1.0 : 2.0;
    const double dg = config.optical_depth * config.gamma_e;
    const double delta = config.delta_plus;
    const std::size_t nt = control.size();
    ComplexVec out(nt);
    Complex acc{};
    Complex prev{};
    for (std::size_t n = 0; n < nt; ++n) {
        const double t = control.t0 + control.dt * static_cast<double>(n);
        const Complex ein = input.in_support(t) ? 2.0 * input.envelope(t) * std::polar(1.0, input.phase) : Complex{};
        const Complex om = control.gate_open(t) ? control.omega[n] : Complex{};
        const Complex f = om / delta * ein;
        if (n > 0) acc += 0.5 * control.dt * (prev + f);
        prev = f;
        out[n] = ein - c * dg * (om / delta) * acc;
    }
    return out;
}

ControlProfile recall_schedule(const ControlProfile& control, double hold, double recall_duration)
{
    if (std::isnan(hold) || hold < 0.0) throw ConfigError("hold time must be nonnegative");
    if (!(recall_duration >= 0.0) || !std::isfinite(recall_duration)) {
        throw ConfigError("recall duration must be finite and nonnegative");
    }
    if (control.size() < 2 || control.schedule.empty()) throw ConfigError("control has no storage window");

    const double t_store = control.schedule.back().t_off;
    Complex last{};
    for (std::size_t n = 0; n < control.size(); ++n) {
        const double t = control.t0 + control.dt * static_cast<double>(n);
        if (t > t_store) break;
        if (control.gate_open(t)) last = control.omega[n];
    }

    ControlProfile out = control;
    const auto steps = [&](double duration) { return static_cast<std::size_t>(std::llround(duration / control.dt)); };
    const bool reopen = std::isfinite(hold);
    const std::size_t n_store = steps(t_store - control.t0);
    const std::size_t n_on = reopen ? n_store + steps(hold) : n_store;
    const std::size_t n_total = std::max(control.size(), n_on + steps(recall_duration) + 1);
    for (std::size_t n = n_store + 1; n < control.size(); ++n) out.omega[n] = Complex{};
    out.omega.resize(n_total, Complex{});
    if (reopen) {
        const double t_on = control.t0 + control.dt * static_cast<double>(n_on);
        const double t_off = control.t0 + control.dt * static_cast<double>(n_total - 1);
        for (std::size_t n = n_on; n < n_total; ++n) out.omega[n] = last;
        out.schedule.push_back({t_on, t_off});
    }
    return out;
}

}  // namespace tracemem::shaping
