#include "tracemem/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace tracemem {

Grid Grid::spanning(double t_begin, double t_end, std::size_t nt, std::size_t nz)
{
    if (nt < 2 || !(t_end > t_begin)) {
        throw ConfigError("grid span needs nt >= 2 and t_end > t_begin");
    }
    Grid g;
    g.nz = nz;
    g.nt = nt;
    g.t0 = t_begin;
    g.dt = (t_end - t_begin) / static_cast<double>(nt - 1);
    return g;
}

FieldState FieldState::zeros(std::size_t nz, bool with_coherences)
{
    FieldState f;
    f.e_plus.assign(nz, {});
    f.e_minus.assign(nz, {});
    f.s.assign(nz, {});
    if (with_coherences) {
        f.p_plus.assign(nz, {});
        f.p_minus.assign(nz, {});
    }
    return f;
}

bool FieldState::finite() const
{
    return all_finite(e_plus) && all_finite(e_minus) && all_finite(s) && all_finite(p_plus) &&
           all_finite(p_minus);
}

void FieldState::check_shape() const
{
    const auto n = s.size();
    auto bad = [n](const ComplexVec& v, bool optional) {
        return optional ? !(v.empty() || v.size() == n) : v.size() != n;
    };
    if (bad(e_plus, false) || bad(e_minus, false) || bad(p_plus, true) || bad(p_minus, true)) {
        throw ConfigError("field state arrays must share the spinwave length");
    }
}

namespace {

Complex interpolate(const SampledPulse& p, double t)
{
    if (p.values.empty()) return {};
    const double x = (t - p.t0) / p.dt;
    if (x <= 0.0) return p.values.front();
    const auto last = static_cast<double>(p.values.size() - 1);
    if (x >= last) return p.values.back();
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * p.values[i] + f * p.values[i + 1];
}

}  // namespace

Complex PulseShape::envelope(double t) const
{
    struct Visitor {
        double t;
        Complex operator()(const RisingExponential& p) const
        {
            return p.amplitude * std::exp(p.rate * (t - p.cutoff));
        }
        Complex operator()(const GaussianPulse& p) const
        {
            const double x = (t - p.center) / p.width;
            return p.amplitude * std::exp(-0.5 * x * x);
        }
        Complex operator()(const SampledPulse& p) const { return interpolate(p, t); }
    };
    return std::visit(Visitor{t}, kind);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SupportVisitor {
    std::pair<double, double> operator()(const RisingExponential& p) const { return {-kInf, p.cutoff}; }
    std::pair<double, double> operator()(const GaussianPulse&) const { return {-kInf, kInf}; }
    std::pair<double, double> operator()(const SampledPulse& p) const
    {
        return {p.t0, p.t0 + p.dt * static_cast<double>(p.values.size() - 1)};
    }
};

}  // namespace

std::pair<double, double> PulseShape::support() const
{
    return std::visit(SupportVisitor{}, kind);
}

bool PulseShape::in_support(double t) const
{
    const auto [lo, hi] = support();
    return t >= lo && t <= hi;
}

PulseShape PulseShape::scaled(double c) const
{
    PulseShape out = *this;
    std::visit(
        [c](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SampledPulse>) {
                for (auto& v : p.values) v *= c;
            } else {
                p.amplitude *= c;
            }
        },
        out.kind);
    return out;
}

bool ControlProfile::gate_open(double t) const
{
    return std::any_of(schedule.begin(), schedule.end(),
                       [t](const GateWindow& w) { return t >= w.t_on && t <= w.t_off; });
}

Grid ControlProfile::grid(std::size_t nz) const
{
    Grid g;
    g.nz = nz;
    g.nt = omega.size();
    g.dt = dt;
    g.t0 = t0;
    return g;
}

ControlProfile ControlProfile::constant(const Grid& grid, Complex omega, std::vector<GateWindow> windows)
{
    ControlProfile c;
    c.t0 = grid.t0;
    c.dt = grid.dt;
    c.schedule = std::move(windows);
    c.omega.resize(grid.nt);
    for (std::size_t n = 0; n < grid.nt; ++n) {
        c.omega[n] = c.gate_open(grid.time(n)) ? omega : Complex{};
    }
    return c;
}

ControlProfile ControlProfile::zero(const Grid& grid)
{
    return constant(grid, {}, {});
}

ValidationReport validate_config(const EnsembleConfig& config, const Grid& grid,
                                  std::optional<double> max_omega)
{
    ValidationReport r;
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(config.optical_depth) || config.optical_depth < 0.0) {
        r.violations.emplace_back("optical depth negative");
    }
    if (!finite(config.gamma_e) || config.gamma_e <= 0.0) {
        r.violations.emplace_back("excited linewidth must be positive");
    }
    if (!finite(config.gamma_s) || config.gamma_s < 0.0) {
        r.violations.emplace_back("spinwave decay rate negative");
    }
    if (!finite(config.delta_plus) || !finite(config.delta_minus)) {
        r.violations.emplace_back("detuning not finite");
    }
    for (const auto& level : config.excited_levels) {
        if (!(level.strength >= 0.0)) r.violations.emplace_back("line strength negative");
    }
    if (grid.nz < 2) r.violations.emplace_back("nz must be at least 2");
    if (grid.nt < 2) r.violations.emplace_back("nt must be at least 2");
    if (!(grid.dt > 0.0) || !finite(grid.dt)) r.violations.emplace_back("dt must be positive");

    if (config.gamma_e > 0.0) {
        const double ratio = std::min(std::abs(config.delta_plus), std::abs(config.delta_minus)) /
                             config.gamma_e;
        if (ratio < 10.0) r.warnings.emplace_back("adiabatic model untrusted (|delta|/gamma < 10)");
    }
    if (max_omega && config.delta_plus != 0.0 && grid.dt > 0.0) {
        const double ratio = *max_omega / config.delta_plus;
        const double cfl = grid.dt * config.optical_depth * config.gamma_e * ratio * ratio;
        if (cfl > 0.1) {
            r.warnings.emplace_back(fmt::format("time step coarse relative to coupling rate ({:.3g} > 0.1)", cfl));
        }
    }
    return r;
}

void require_valid(const EnsembleConfig& config, const Grid& grid)
{
    const auto report = validate_config(config, grid);
    if (!report.ok()) {
        std::string msg = "invalid configuration:";
        for (const auto& v : report.violations) msg += " " + v + ";";
        throw ConfigError(msg);
    }
}

double input_energy(const PulseShape& shape, const Grid& grid)
{
    std::vector<double> flux(grid.nt);
    for (std::size_t n = 0; n < grid.nt; ++n) {
        const double t = grid.time(n);
        if (!shape.in_support(t)) {
            flux[n] = 0.0;
            continue;
        }
        const Complex e = shape.envelope(t);
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) {
            throw ConfigError("input envelope has non-finite samples");
        }
        flux[n] = 2.0 * std::norm(e);
    }
    return trapezoid(flux, grid.dt);
}

double trapezoid(std::span<const double> f, double h)
{
    if (f.size() < 2) return 0.0;
    double acc = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
    return acc * h;
}

Complex trapezoid(std::span<const Complex> f, double h)
{
    if (f.size() < 2) return {};
    Complex acc = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
    return acc * h;
}

double norm2_trapezoid(std::span<const Complex> f, double h)
{
    if (f.size() < 2) return 0.0;
    double acc = 0.5 * (std::norm(f.front()) + std::norm(f.back()));
    for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += std::norm(f[i]);
    return acc * h;
}

void cumulative_trapezoid(std::span<const Complex> f, double h, std::span<Complex> out)
{
    if (f.empty()) return;
    out[0] = {};
    for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
}

bool all_finite(std::span<const Complex> v)
{
    return std::all_of(v.begin(), v.end(), [](const Complex& c) {
        return std::isfinite(c.real()) && std::isfinite(c.imag());
    });
}

}  // namespace tracemem
