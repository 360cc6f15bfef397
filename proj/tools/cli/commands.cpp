#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "app.hpp"
#include "config.hpp"
#include "tracemem/adiabatic.hpp"
#include "tracemem/efficiency.hpp"
#include "tracemem/parallel.hpp"
#include "tracemem/phase.hpp"
#include "tracemem/shaping.hpp"
#include "tracemem/stats.hpp"
#include "tracemem/three_level.hpp"

namespace tracecli {

namespace fs = std::filesystem;
namespace tm = tracemem;
using tm::Complex;
using tm::ConfigError;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wrap(double x)
{
    return std::remainder(x, 2.0 * std::numbers::pi);
}

std::uint64_t resolve_seed(Section& root, const RunOptions& opt)
{
    const double from_config = root.number("seed", 1.0);
    if (opt.seed) return *opt.seed;
    if (!(from_config >= 0.0) || from_config != std::floor(from_config) || from_config > 9.007199254740992e15) {
        root.fail("seed must be a nonnegative integer");
    }
    return static_cast<std::uint64_t>(from_config);
}

void emit(std::ostream& out, const fs::path& path)
{
    out << path.string() << '\n';
}

fs::path prepare_out(const RunOptions& opt)
{
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", opt.out.string(), ec.message()));
    return opt.out;
}

Section load(const RunOptions& opt)
{
    if (opt.config.empty()) throw ConfigError("--config is required for this command");
    return Section::load_file(opt.config);
}

Json ensemble_json(const tm::EnsembleConfig& c)
{
    Json levels = Json::array();
    for (const auto& l : c.excited_levels) levels.push_back({{"offset", l.offset}, {"strength", l.strength}});
    return {{"optical_depth", c.optical_depth}, {"gamma_e", c.gamma_e}, {"gamma_s", c.gamma_s},
            {"delta_plus", c.delta_plus},       {"delta_minus", c.delta_minus}, {"excited_levels", levels}};
}

Json sinusoid_json(const tm::stats::Sinusoid& s)
{
    return {{"offset", s.offset}, {"amplitude", s.amplitude}, {"phase", s.phase}, {"residual_rms", s.residual_rms}};
}

// ---------------------------------------------------------------------------
// Shared memory setup: ensemble, grid, pulse, control (with optional recall)
// and mismatch.

struct Memory {
    tm::EnsembleConfig ensemble;
    tm::Grid storage_grid;
    tm::Grid grid;  // storage plus recall when configured
    tm::PulseShape pulse;
    tm::ControlProfile storage;
    tm::ControlProfile control;
    bool has_recall = false;
    double recall_duration = 0.0;
    tm::adiabatic::MismatchSpec mismatch;
};

Memory read_memory(Section& root, bool recall_required)
{
    Memory m;
    m.ensemble = read_ensemble(root.child("ensemble", true));
    auto grid_section = root.child("grid", true);
    m.storage_grid = read_grid(grid_section);
    m.pulse = read_pulse(root.child("pulse", true));

    auto cs = root.child("control", true);
    const auto mode = cs.text("mode", "constant");
    const auto& g = m.storage_grid;
    if (mode == "constant") {
        const double omega = cs.number("omega");
        const double phase = cs.number("phase", 0.0);
        std::vector<tm::GateWindow> windows;
        if (cs.has("windows")) {
            for (auto w : cs.children("windows")) {
                windows.push_back({w.number("on"), w.number("off")});
                w.finish();
                if (!(windows.back().t_off >= windows.back().t_on)) w.fail("window 'off' precedes 'on'");
            }
        } else {
            windows.push_back({g.t0, std::min(m.pulse.support().second, g.t_end())});
        }
        m.storage = tm::ControlProfile::constant(g, std::polar(omega, phase), windows);
    } else if (mode == "shaped") {
        tm::shaping::ShapingOptions so;
        const auto form = cs.text("form", "squared_integrand");
        if (form == "linear_integrand") {
            so.form = tm::shaping::ClosedForm::linear_integrand;
        } else if (form != "squared_integrand") {
            cs.fail(fmt::format("unknown closed form '{}' (squared_integrand | linear_integrand)", form));
        }
        so.bandwidth_limit = cs.number("bandwidth_limit", so.bandwidth_limit);
        so.onset_fraction = cs.number("onset_fraction", so.onset_fraction);
        so.max_rate_step = cs.number("max_rate_step", so.max_rate_step);
        so.validate = false;
        m.storage = with_line(cs, [&] { return tm::shaping::shape_control(m.ensemble, g, m.pulse, so).omega; });
    } else if (mode == "off") {
        m.storage = tm::ControlProfile::zero(g);
    } else {
        cs.fail(fmt::format("unknown control mode '{}' (constant | shaped | off)", mode));
    }

    m.control = m.storage;
    m.grid = m.storage_grid;
    if (cs.has("recall")) {
        auto rs = cs.child("recall");
        const double hold = rs.number("hold", 0.0);
        m.recall_duration = rs.number("duration");
        rs.finish();
        m.control = with_line(rs, [&] { return tm::shaping::recall_schedule(m.storage, hold, m.recall_duration); });
        m.grid = m.control.grid(g.nz);
        m.has_recall = std::isfinite(hold);
    } else if (recall_required) {
        cs.fail("this command needs a control.recall section");
    }
    cs.finish();

    if (root.has("mismatch")) {
        auto ms = root.child("mismatch");
        m.mismatch.delta_k = ms.number("delta_k", 0.0);
        m.mismatch.global_phase = ms.number("global_phase", 0.0);
        ms.finish();
    }
    with_line(grid_section, [&] { tm::require_valid(m.ensemble, m.grid); });
    return m;
}

// Last open storage control value.
Complex last_open(const tm::ControlProfile& c)
{
    Complex last{};
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double t = c.t0 + c.dt * static_cast<double>(n);
        if (c.gate_open(t)) last = c.omega[n];
    }
    return last;
}

Table envelope_table(const tm::SimulationResult& r)
{
    Table t{{"t", "e_out_plus_re", "e_out_plus_im", "e_out_minus_re", "e_out_minus_im"}, {}};
    for (std::size_t n = 0; n < r.time.size(); ++n) {
        t.add({r.time[n], r.e_out_plus[n].real(), r.e_out_plus[n].imag(), r.e_out_minus[n].real(),
               r.e_out_minus[n].imag()});
    }
    return t;
}

Table spinwave_table(const tm::ComplexVec& s)
{
    Table t{{"z", "s_re", "s_im"}, {}};
    const double dz = s.size() > 1 ? 1.0 / static_cast<double>(s.size() - 1) : 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) t.add({dz * static_cast<double>(j), s[j].real(), s[j].imag()});
    return t;
}

Json energies_json(const tm::SimulationResult& r)
{
    Json j = Json::object();
    j["energy_in"] = r.energy_in;
    j["energy_transmitted"] = r.energy_transmitted;
    j["energy_recalled"] = r.energy_recalled;
    j["energy_residual"] = r.energy_residual;
    j["transmitted_plus"] = r.transmitted_plus;
    j["transmitted_minus"] = r.transmitted_minus;
    j["recalled_plus"] = r.recalled_plus;
    j["recalled_minus"] = r.recalled_minus;
    return j;
}

Json diagnostics_json(const std::map<std::string, double>& d)
{
    Json j = Json::object();
    for (const auto& [k, v] : d) j[k] = number_json(v);
    return j;
}

// ---------------------------------------------------------------------------
// simulate

int simulate_adiabatic(Section& root, const RunOptions& opt, std::ostream& out)
{
    const auto m = read_memory(root, false);
    root.finish();
    const auto dir = prepare_out(opt);

    spdlog::info("adiabatic run: d = {}, nz = {}, nt = {}", m.ensemble.optical_depth, m.grid.nz, m.grid.nt);
    const auto res = tm::adiabatic::simulate_storage(m.ensemble, m.grid, m.pulse, m.control, m.mismatch);
    auto stored = res;
    if (m.control.size() != m.storage.size()) {
        stored = tm::adiabatic::simulate_storage(m.ensemble, m.storage_grid, m.pulse, m.storage, m.mismatch);
    }

    Json summary = Json::object();
    summary["command"] = "simulate";
    summary["model"] = "adiabatic";
    summary["efficiency"] = res.efficiency;
    summary.update(energies_json(res));
    summary["transmission"] = res.energy_transmitted / res.energy_in;
    summary["stored_fraction"] = stored.energy_residual / stored.energy_in;
    summary["energy_imbalance"] =
        (res.energy_in - res.energy_transmitted - res.energy_recalled - res.energy_residual) / res.energy_in;
    try {
        summary["uniformity"] = number_json(tm::adiabatic::uniformity_metric(stored.spinwave_final));
    } catch (const ConfigError& e) {
        summary["uniformity"] = nullptr;
        summary["uniformity_error"] = e.what();
    }
    summary["grid"] = {{"nz", m.grid.nz}, {"nt", m.grid.nt}, {"dt", m.grid.dt}, {"t0", m.grid.t0}};
    summary["diagnostics"] = diagnostics_json(res.diagnostics);

    emit(out, write_table(envelope_table(res), dir, "envelopes", opt.format));
    emit(out, write_table(spinwave_table(stored.spinwave_final), dir, "spinwave", opt.format));
    emit(out, write_json(summary, dir, "summary"));
    return kExitOk;
}

int simulate_three_level(Section& root, const RunOptions& opt, std::ostream& out)
{
    const auto ensemble = read_ensemble(root.child("ensemble", true));
    auto tl = root.child("three_level", true);
    const double omega = tl.number("omega", 1.0);
    const double dt = tl.number("dt", 0.01);
    const double max_time = tl.number("max_time", 4000.0);
    const double threshold = tl.number("threshold", 1e-6);
    const auto nz = tl.count("nz", 101);
    const auto initial = tl.text("spinwave", "dispersion_matched");
    const bool round_trip = tl.flag("round_trip", false);
    const auto iterations = tl.count("iterations", 1);
    tm::three_level::SolverOptions so;
    so.stability_limit = tl.number("stability_limit", so.stability_limit);
    tl.finish();
    root.finish();

    with_line(tl, [&] {
        if (!(omega > 0.0)) throw ConfigError("three_level.omega must be positive");
        if (!(dt > 0.0)) throw ConfigError("three_level.dt must be positive");
        tm::Grid g;
        g.nz = nz;
        g.dt = dt;
        tm::require_valid(ensemble, g);
    });
    tm::ComplexVec s0;
    if (initial == "dispersion_matched") {
        s0 = tm::three_level::dispersion_matched_spinwave(ensemble, nz);
    } else if (initial == "uniform") {
        s0.assign(nz, Complex{1.0, 0.0});
    } else {
        tl.fail(fmt::format("unknown spinwave '{}' (uniform | dispersion_matched)", initial));
    }
    const auto dir = prepare_out(opt);

    spdlog::info("three-level retrieval: d = {}, omega = {}, dt = {}", ensemble.optical_depth, omega, dt);
    const auto run = tm::three_level::complete_retrieval(ensemble, s0, omega, dt, max_time, threshold, so);

    Json summary = Json::object();
    summary["command"] = "simulate";
    summary["model"] = "three_level";
    summary["efficiency"] = run.result.efficiency;
    summary.update(energies_json(run.result));
    summary["single_pass_limit"] = tm::efficiency::trace_single_pass(ensemble.optical_depth);
    try {
        summary["reduced_model_efficiency"] = tm::three_level::reduced_retrieval(ensemble, s0, omega).efficiency;
    } catch (const std::exception& e) {
        summary["reduced_model_efficiency"] = nullptr;
    }
    summary["initial_energy"] = run.initial_energy;
    summary["ledger_error"] = run.ledger_error;
    summary["excited_loss"] = run.excited_loss;
    summary["spinwave_loss"] = run.spinwave_loss;
    summary["remaining_energy"] = run.remaining_energy;
    summary["substeps"] = run.substeps;
    try {
        summary["adiabatic_residual"] = number_json(tm::three_level::adiabatic_residual(run));
    } catch (const std::exception&) {
        summary["adiabatic_residual"] = nullptr;
    }
    try {
        summary["uniformity"] = number_json(tm::adiabatic::uniformity_metric(s0));
    } catch (const ConfigError&) {
        summary["uniformity"] = nullptr;
    }
    if (round_trip) {
        const auto rt = tm::three_level::optimal_round_trip(ensemble, s0, omega, dt, max_time,
                                                            static_cast<int>(iterations), so);
        summary["round_trip"] = {{"storage_efficiency", rt.storage_efficiency},
                                 {"retrieval_efficiency", rt.retrieval_efficiency},
                                 {"total_efficiency", rt.total_efficiency},
                                 {"limit", tm::efficiency::trace_efficiency(ensemble.optical_depth)}};
    }
    summary["diagnostics"] = diagnostics_json(run.result.diagnostics);

    emit(out, write_table(envelope_table(run.result), dir, "envelopes", opt.format));
    emit(out, write_json(summary, dir, "summary"));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweeps

Table fig1b_table(std::vector<double> x, const Section& where)
{
    std::sort(x.begin(), x.end());
    const auto curves = with_line(where, [&] { return tm::efficiency::figure1b_dataset(x, x); });
    Table t{{"x", "cavity", "trace", "freespace_raman"}, {}};
    for (std::size_t i = 0; i < x.size(); ++i) {
        t.add({x[i], curves[0].efficiency[i], curves[1].efficiency[i], curves[2].efficiency[i]});
    }
    return t;
}

std::vector<double> default_fig1b_range()
{
    return tm::efficiency::log_range(1.0, 1000.0, 61);
}

int sweep_fig1b(Section& root, Section& sw, const RunOptions& opt, std::ostream& out)
{
    const auto x = sw.has("x") ? read_range(sw.child("x")) : default_fig1b_range();
    sw.finish();
    root.finish();
    const auto table = fig1b_table(x, sw);
    emit(out, write_table(table, prepare_out(opt), "fig1b", opt.format));
    return kExitOk;
}

int sweep_mismatch(Section& root, Section& sw, const RunOptions& opt, std::ostream& out)
{
    auto delta_k = read_range(sw.child("delta_k", true));
    const auto phase_points = sw.count("phase_points", 8);
    sw.finish();
    const auto m = read_memory(root, true);
    root.finish();
    if (phase_points < 3) sw.fail("sweep.phase_points must be at least 3");
    const auto dir = prepare_out(opt);

    spdlog::info("mismatch sweep: {} points on {} jobs", delta_k.size(), opt.jobs);
    const auto rows = tm::phase::mismatch_fringe_sweep(m.ensemble, m.grid, m.pulse, m.control, std::move(delta_k),
                                                       phase_points, opt.jobs);
    Table t{{"delta_k", "transmitted_offset", "recalled_offset", "max_efficiency", "error"}, {}};
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) ++failed;
        t.add({r.delta_k, r.transmitted_offset, r.recalled_offset, r.max_efficiency, r.error});
    }
    emit(out, write_table(t, dir, "mismatch", opt.format));
    if (failed == rows.size()) throw tm::SolverError("every sweep point failed: " + rows.front().error);
    return kExitOk;
}

int sweep_decay(Section& root, Section& sw, const RunOptions& opt, std::ostream& out)
{
    auto holds = read_range(sw.child("hold_time", true));
    const double tau_e = sw.number("spinwave_lifetime", kInf);
    double tau_g = kInf;
    double temperature = kNaN;
    double lambda_s = kNaN;
    if (sw.has("gaussian_time") && sw.has("temperature")) sw.fail("give gaussian_time or temperature, not both");
    if (sw.has("gaussian_time")) tau_g = sw.number("gaussian_time");
    const bool thermal = sw.has("temperature");
    if (thermal) temperature = sw.number("temperature");
    const double noise = sw.number("noise", 0.0);
    sw.finish();
    tm::phase::GeometryConfig geometry;
    if (root.has("geometry")) geometry = read_geometry(root.child("geometry"));
    const auto m = read_memory(root, true);
    const auto seed = resolve_seed(root, opt);
    root.finish();

    with_line(sw, [&] {
        if (!(tau_e > 0.0)) throw ConfigError("sweep.spinwave_lifetime must be positive");
        if (!(tau_g > 0.0)) throw ConfigError("sweep.gaussian_time must be positive");
        if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("sweep.noise must be in [0, 1)");
        for (double t : holds) {
            if (t < 0.0) throw ConfigError("hold times must be nonnegative");
        }
        if (thermal) {
            lambda_s = tm::phase::spinwave_wavelength(geometry);
            tau_g = tm::phase::gaussian_tau_from_temperature(temperature, lambda_s);
        }
    });
    std::sort(holds.begin(), holds.end());
    const auto dir = prepare_out(opt);

    // Store once, then retrieve the spinwave left after each hold.
    const auto stored =
        tm::adiabatic::simulate_storage(m.ensemble, m.storage_grid, m.pulse, m.storage, m.mismatch);
    const auto steps = static_cast<std::size_t>(std::llround(m.recall_duration / m.storage_grid.dt));
    if (steps < 1) throw ConfigError("control.recall.duration is shorter than one time step");
    const auto recall_grid = tm::Grid::spanning(0.0, m.storage_grid.dt * static_cast<double>(steps), steps + 1,
                                                m.storage_grid.nz);
    const auto recall = tm::ControlProfile::constant(recall_grid, last_open(m.storage),
                                                     {{0.0, recall_grid.t_end()}});
    const auto retrieve = [&](double factor) {
        tm::ComplexVec s = stored.spinwave_final;
        for (auto& v : s) v *= factor;
        const auto r = tm::adiabatic::simulate_retrieval(m.ensemble, recall_grid, s, recall);
        return r.energy_recalled / stored.energy_in;
    };
    const double eta0 = retrieve(1.0);

    struct Row {
        double clean = kNaN;
        double noisy = kNaN;
        std::string error;
    };
    spdlog::info("decay sweep: {} hold times on {} jobs", holds.size(), opt.jobs);
    const auto rows = tm::parallel_map(holds.size(), opt.jobs, [&](std::size_t i) {
        Row row;
        try {
            const double t = holds[i];
            const double x = std::isfinite(tau_g) ? t / tau_g : 0.0;
            row.clean = retrieve(std::exp(-0.5 * t / tau_e - 0.5 * x * x));
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i)};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> normal(0.0, 1.0);
            row.noisy = noise > 0.0 ? row.clean * (1.0 + noise * normal(rng)) : row.clean;
            row.noisy = std::min(row.noisy, 1.0);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    });

    Table t{{"hold_time", "efficiency", "efficiency_clean", "error"}, {}};
    std::size_t failed = 0;
    for (std::size_t i = 0; i < holds.size(); ++i) {
        if (!rows[i].error.empty()) ++failed;
        t.add({holds[i], rows[i].noisy, rows[i].clean, rows[i].error});
    }
    emit(out, write_table(t, dir, "decay", opt.format));

    Json truth = Json::object();
    truth["eta0"] = eta0;
    truth["tau_e"] = number_json(tau_e);
    truth["tau_g"] = number_json(tau_g);
    truth["temperature"] = number_json(temperature);
    truth["spinwave_wavelength"] = number_json(lambda_s);
    truth["noise"] = noise;
    truth["seed"] = seed;
    emit(out, write_json(truth, dir, "decay_truth"));
    if (failed == holds.size()) throw tm::SolverError("every sweep point failed: " + rows.front().error);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fits

Json fit_decay_report(const CsvData& data)
{
    const auto t = data.numbers(data.has("hold_time") ? "hold_time" : "t");
    const auto eta = data.numbers(data.has("efficiency") ? "efficiency" : "eta");
    std::vector<tm::stats::DecayPoint> curve;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::isfinite(t[i]) && std::isfinite(eta[i]) && eta[i] > 0.0) curve.push_back({t[i], eta[i]});
    }
    Json report = Json::object();
    report["model"] = "decay";
    report["points"] = curve.size();
    report["skipped"] = t.size() - curve.size();
    const auto fit = tm::stats::fit_decay(curve);
    report["parameters"] = {{"eta0", fit.eta0}, {"tau_e", fit.tau_e}, {"tau_g", number_json(fit.tau_g)}};
    report["uncertainties"] = {
        {"eta0", number_json(fit.sigma(0))}, {"tau_e", number_json(fit.sigma(1))}, {"tau_g", number_json(fit.sigma(2))}};
    report["rates"] = {{"eta0", fit.rates[0]}, {"inverse_tau_e", fit.rates[1]}, {"inverse_tau_g_squared", fit.rates[2]}};
    report["rate_uncertainties"] = {{"eta0", number_json(fit.rate_sigma(0))},
                                    {"inverse_tau_e", number_json(fit.rate_sigma(1))},
                                    {"inverse_tau_g_squared", number_json(fit.rate_sigma(2))}};
    report["residual_rms"] = fit.residual_rms;
    report["iterations"] = fit.iterations;
    return report;
}

tm::stats::FringeDataset read_fringe(const CsvData& data)
{
    tm::stats::FringeDataset d;
    d.run_id = data.integers("run_id");
    d.pulse_index = data.integers("pulse_index");
    d.imposed_phase = data.numbers("imposed_phase");
    for (int c = 0; c < tm::stats::kChannels; ++c) {
        const std::string name = tm::stats::channel_name(c);
        if (data.has(name)) d.energies[c] = data.numbers(name);
    }
    if (!d.has(tm::stats::forward_transmitted)) throw ConfigError("fringe data needs a forward_transmitted column");
    d.check();
    return d;
}

Json fit_fringe_report(const CsvData& data)
{
    const auto d = read_fringe(data);
    Json report = Json::object();
    report["model"] = "fringe";
    report["points"] = d.size();
    const auto fit = tm::stats::fit_fringe(d);
    report["runs"] = fit.runs.size();
    Json channels = Json::object();
    Json diffs = Json::object();
    for (int c = 0; c < tm::stats::kChannels; ++c) {
        if (!fit.channels[c]) continue;
        channels[tm::stats::channel_name(c)] = sinusoid_json(*fit.channels[c]);
        diffs[tm::stats::channel_name(c)] = {{"value", *fit.phase_differences[c]},
                                             {"spread", number_json(*fit.phase_difference_spread[c])}};
    }
    report["channels"] = channels;
    report["phase_differences"] = diffs;
    using enum tm::stats::Channel;
    if (fit.phase_differences[backward_transmitted]) {
        report["transmitted_offset"] = wrap(-*fit.phase_differences[backward_transmitted]);
    }
    if (fit.phase_differences[forward_recalled] && fit.phase_differences[backward_recalled]) {
        report["recalled_offset"] =
            wrap(*fit.phase_differences[forward_recalled] - *fit.phase_differences[backward_recalled]);
    }
    report["visibility"] = fit.visibility;
    Json per_run = Json::array();
    for (const auto& r : fit.runs) {
        Json run = {{"run_id", r.run_id}};
        for (int c = 0; c < tm::stats::kChannels; ++c) {
            if (r.channels[c]) run[tm::stats::channel_name(c)] = sinusoid_json(*r.channels[c]);
        }
        per_run.push_back(std::move(run));
    }
    report["per_run"] = per_run;
    return report;
}

Json fit_efficiency_report(const CsvData& data, const RunOptions& opt)
{
    const auto samples = data.numbers(data.has("energy") ? "energy" : "sample");
    tm::stats::EstimateOptions eo;
    eo.bootstrap = opt.bootstrap;
    eo.seed = opt.seed.value_or(1);
    eo.jobs = opt.jobs;
    Json report = Json::object();
    report["model"] = "efficiency";
    report["points"] = samples.size();
    const auto est = tm::stats::estimate_efficiency(samples, eo);
    report["parameters"] = {{"a", est.model.a}, {"b", est.model.b}, {"noise_sigma", est.model.noise_sigma}};
    report["efficiency"] = est.efficiency;
    report["uncertainties"] = {{"ci_low", est.ci_low}, {"ci_high", est.ci_high}, {"confidence", eo.confidence}};
    report["log_likelihood"] = est.log_likelihood;
    report["bins"] = est.bins;
    report["quadrature"] = est.quadrature;
    report["bootstrap"] = eo.bootstrap;
    report["seed"] = eo.seed;
    return report;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_simulate(const RunOptions& opt, std::ostream& out)
{
    auto root = load(opt);
    const auto model = root.text("model", "adiabatic");
    if (model == "adiabatic") return simulate_adiabatic(root, opt, out);
    if (model == "three_level") return simulate_three_level(root, opt, out);
    root.fail(fmt::format("unknown model '{}' (adiabatic | three_level)", model));
}

int cmd_sweep(const RunOptions& opt, std::ostream& out)
{
    auto root = load(opt);
    auto sw = root.child("sweep", true);
    const auto kind = sw.text("kind");
    if (kind == "fig1b") return sweep_fig1b(root, sw, opt, out);
    if (kind == "mismatch") return sweep_mismatch(root, sw, opt, out);
    if (kind == "decay") return sweep_decay(root, sw, opt, out);
    sw.fail(fmt::format("unknown sweep kind '{}' (fig1b | decay | mismatch)", kind));
}

int cmd_fig1b(const RunOptions& opt, std::ostream& out)
{
    Section root;
    std::vector<double> x = default_fig1b_range();
    if (!opt.config.empty()) {
        root = Section::load_file(opt.config);
        if (root.has("x")) x = read_range(root.child("x"));
        root.finish();
    }
    emit(out, write_table(fig1b_table(x, root), prepare_out(opt), "fig1b", opt.format));
    return kExitOk;
}

int cmd_shape_control(const RunOptions& opt, std::ostream& out)
{
    auto root = load(opt);
    const auto ensemble = read_ensemble(root.child("ensemble", true));
    auto grid_section = root.child("grid", true);
    const auto grid = read_grid(grid_section);
    const auto pulse = read_pulse(root.child("pulse", true));
    tm::shaping::ShapingOptions so;
    auto ss = root.child("shaping");
    const auto form = ss.text("form", "squared_integrand");
    if (form == "linear_integrand") {
        so.form = tm::shaping::ClosedForm::linear_integrand;
    } else if (form != "squared_integrand") {
        ss.fail(fmt::format("unknown closed form '{}' (squared_integrand | linear_integrand)", form));
    }
    so.bandwidth_limit = ss.number("bandwidth_limit", so.bandwidth_limit);
    so.onset_fraction = ss.number("onset_fraction", so.onset_fraction);
    so.max_rate_step = ss.number("max_rate_step", so.max_rate_step);
    so.validate = ss.flag("validate", true);
    ss.finish();
    root.finish();
    with_line(grid_section, [&] { tm::require_valid(ensemble, grid); });

    const auto result = with_line(grid_section, [&] { return tm::shaping::shape_control(ensemble, grid, pulse, so); });
    const auto dir = prepare_out(opt);
    Table t{{"t", "omega_re", "omega_im"}, {}};
    double max_omega = 0.0;
    const auto& c = result.omega;
    for (std::size_t n = 0; n < c.size(); ++n) {
        t.add({c.t0 + c.dt * static_cast<double>(n), c.omega[n].real(), c.omega[n].imag()});
        max_omega = std::max(max_omega, std::abs(c.omega[n]));
    }
    Json windows = Json::array();
    for (const auto& w : c.schedule) windows.push_back({{"on", w.t_on}, {"off", w.t_off}});
    Json summary = Json::object();
    summary["command"] = "shape-control";
    summary["closed_form"] = tm::shaping::to_string(result.closed_form_used);
    summary["residual_output_fraction"] = number_json(result.residual_output_fraction);
    summary["max_omega"] = max_omega;
    summary["windows"] = windows;
    summary["bandwidth_limit"] = so.bandwidth_limit;
    emit(out, write_table(t, dir, "control", opt.format));
    emit(out, write_json(summary, dir, "shape_control"));
    return kExitOk;
}

int cmd_phase_offset(const RunOptions& opt, std::ostream& out)
{
    auto root = load(opt);
    tm::EnsembleConfig ensemble;
    Json report = Json::object();
    report["command"] = "phase-offset";
    if (root.has("d1") == root.has("ensemble")) root.fail("give exactly one of 'd1' or 'ensemble'");
    if (root.has("d1")) {
        auto d1 = root.child("d1");
        const double d = d1.number("optical_depth");
        const double detuning = d1.number("detuning_mhz");
        const auto ratio_text = d1.text("strength_ratio", "calibrated");
        double ratio = tm::phase::kD1CalibratedStrengthRatio;
        if (ratio_text == "standard") {
            ratio = tm::phase::kD1StandardStrengthRatio;
        } else if (ratio_text != "calibrated") {
            try {
                std::size_t used = 0;
                ratio = std::stod(ratio_text, &used);
                if (used != ratio_text.size()) throw std::invalid_argument(ratio_text);
            } catch (const std::exception&) {
                d1.fail(fmt::format("d1.strength_ratio must be calibrated, standard or a number, not '{}'",
                                    ratio_text));
            }
        }
        std::optional<double> target;
        if (d1.has("calibrate_to")) target = d1.number("calibrate_to");
        d1.finish();
        ensemble = with_line(d1, [&] { return tm::phase::d1_config(d, detuning, ratio); });
        report["d1"] = {{"optical_depth", d}, {"detuning_mhz", detuning}, {"strength_ratio", ratio},
                        {"linewidth_mhz", tm::phase::kD1Linewidth},
                        {"excited_splitting_mhz", tm::phase::kD1ExcitedSplitting}};
        if (target) {
            const double calibrated =
                with_line(d1, [&] { return tm::phase::calibrate_strength_ratio(d, detuning, *target); });
            report["calibration"] = {{"target_offset", *target}, {"strength_ratio", calibrated}};
        }
    } else {
        ensemble = read_ensemble(root.child("ensemble"));
    }
    tm::phase::GeometryConfig geometry;
    if (root.has("geometry")) geometry = read_geometry(root.child("geometry"));
    std::optional<double> tau_g;
    if (root.has("gaussian_time")) tau_g = root.number("gaussian_time");
    root.finish();

    report["ensemble"] = ensemble_json(ensemble);
    with_line(root, [&] {
        report["mismatch"] = tm::phase::dispersion_mismatch(ensemble);
        report["offset"] = tm::phase::dispersion_phase_offset(ensemble);
        const auto fix = tm::phase::correct_detuning(ensemble);
        report["correction"] = {{"delta_plus", fix.delta_plus},
                                {"delta_minus", fix.delta_minus},
                                {"adjustment", fix.adjustment},
                                {"residual_offset", fix.residual_offset}};
        auto co = geometry;
        co.theta = 0.0;
        const double lambda_s = tm::phase::spinwave_wavelength(geometry);
        report["geometry"] = {{"lambda_probe", geometry.lambda_probe},
                              {"hyperfine_splitting", geometry.hyperfine_splitting},
                              {"theta", geometry.theta},
                              {"spinwave_wavenumber", tm::phase::spinwave_wavenumber(geometry)},
                              {"spinwave_wavelength", lambda_s},
                              {"copropagating_wavelength", tm::phase::spinwave_wavelength(co)}};
        if (tau_g) {
            report["thermal"] = {{"gaussian_time", *tau_g},
                                 {"temperature", tm::phase::temperature_from_gaussian_tau(*tau_g, lambda_s)}};
        }
    });
    emit(out, write_json(report, prepare_out(opt), "phase_offset"));
    return kExitOk;
}

int cmd_fringe_sim(const RunOptions& opt, std::ostream& out)
{
    auto root = load(opt);
    const auto m = read_memory(root, true);
    tm::phase::FringeTrainSpec spec;
    auto ts = root.child("train");
    spec.runs = ts.count("runs", spec.runs);
    spec.pulses = ts.count("pulses", spec.pulses);
    spec.phase_step = ts.number("phase_step", spec.phase_step);
    spec.noise = ts.number("noise", spec.noise);
    const auto phase_points = ts.count("phase_points", 8);
    ts.finish();
    const auto seed = resolve_seed(root, opt);
    root.finish();
    if (phase_points < 3) ts.fail("train.phase_points must be at least 3");

    spdlog::info("fringe response at delta_k = {}", m.mismatch.delta_k);
    const auto response =
        tm::phase::fringe_response(m.ensemble, m.grid, m.pulse, m.control, m.mismatch.delta_k, phase_points);
    const auto data = with_line(ts, [&] { return tm::phase::synthetic_fringe_train(response, spec, seed); });
    const auto dir = prepare_out(opt);

    Table t{{"run_id", "pulse_index", "imposed_phase"}, {}};
    for (int c = 0; c < tm::stats::kChannels; ++c) t.columns.emplace_back(tm::stats::channel_name(c));
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<Cell> row{static_cast<long long>(data.run_id[i]), static_cast<long long>(data.pulse_index[i]),
                              data.imposed_phase[i]};
        for (int c = 0; c < tm::stats::kChannels; ++c) row.emplace_back(data.energies[c][i]);
        t.add(std::move(row));
    }

    Json channels = Json::object();
    Json diffs = Json::object();
    const double ref = response.channels[tm::stats::forward_transmitted].phase;
    for (int c = 0; c < tm::stats::kChannels; ++c) {
        channels[tm::stats::channel_name(c)] = sinusoid_json(response.channels[c]);
        diffs[tm::stats::channel_name(c)] = wrap(response.channels[c].phase - ref);
    }
    using enum tm::stats::Channel;
    Json truth = Json::object();
    truth["delta_k"] = m.mismatch.delta_k;
    truth["input_energy"] = response.input_energy;
    truth["channels"] = channels;
    truth["phase_differences"] = diffs;
    truth["transmitted_offset"] =
        wrap(response.channels[forward_transmitted].phase - response.channels[backward_transmitted].phase);
    truth["recalled_offset"] =
        wrap(response.channels[forward_recalled].phase - response.channels[backward_recalled].phase);
    truth["train"] = {{"runs", spec.runs}, {"pulses", spec.pulses}, {"phase_step", spec.phase_step},
                      {"noise", spec.noise}};
    truth["seed"] = seed;

    emit(out, write_table(t, dir, "fringe", opt.format));
    emit(out, write_json(truth, dir, "fringe_truth"));
    return kExitOk;
}

int cmd_fit(const RunOptions& opt, std::ostream& out)
{
    if (opt.data.empty()) throw ConfigError("--data is required for fit");
    if (opt.model != "decay" && opt.model != "fringe" && opt.model != "efficiency") {
        throw ConfigError(fmt::format("--model must be decay, fringe or efficiency, not '{}'", opt.model));
    }
    const auto data = CsvData::read(opt.data);
    const auto dir = prepare_out(opt);
    const auto stem = "fit_" + opt.model;
    try {
        Json report;
        if (opt.model == "decay") {
            report = fit_decay_report(data);
        } else if (opt.model == "fringe") {
            report = fit_fringe_report(data);
        } else {
            report = fit_efficiency_report(data, opt);
        }
        report["status"] = "ok";
        emit(out, write_json(report, dir, stem));
    } catch (const tm::FitError& e) {
        Json report = {{"model", opt.model}, {"status", "failed"}, {"error", e.what()}, {"rows", data.rows()}};
        emit(out, write_json(report, dir, stem));
        throw;
    }
    return kExitOk;
}

}  // namespace tracecli
