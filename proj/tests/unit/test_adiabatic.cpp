#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "tracemem/adiabatic.hpp"

using namespace tracemem;
using namespace tracemem::adiabatic;

namespace {

EnsembleConfig ensemble(double d, double delta)
{
    EnsembleConfig c;
    c.optical_depth = d;
    c.delta_plus = delta;
    c.delta_minus = -delta;
    return c;
}

}  // namespace

TEST_CASE("matched rising exponential is absorbed into a uniform spinwave")
{
    // k = d Gamma (Omega/Delta)^2 with k = 1.
    const auto c = ensemble(500.0, 40.0);
    const double omega = 40.0 / std::sqrt(500.0);
    const auto g = Grid::spanning(-15.0, 0.0, 4001, 201);
    const auto control = ControlProfile::constant(g, omega, {{g.t0, 0.0}});
    const auto r = simulate_storage(c, g, PulseShape{RisingExponential{1.0, 1.0, 0.0}}, control);
    CHECK(r.energy_in == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.energy_transmitted / r.energy_in < 1e-3);
    CHECK(uniformity_metric(r.spinwave_final) < 1e-6);
    CHECK(r.transmitted_plus == doctest::Approx(r.transmitted_minus));
}

TEST_CASE("mismatched exponential leaks")
{
    const auto c = ensemble(100.0, 10.0);
    const auto g = Grid::spanning(-15.0, 0.0, 3001, 101);
    const auto control = ControlProfile::constant(g, 2.0, {{g.t0, 0.0}});  // rate 4 against k = 1
    const auto r = simulate_storage(c, g, PulseShape{RisingExponential{1.0, 1.0, 0.0}}, control);
    CHECK(r.energy_transmitted / r.energy_in > 0.05);
}

TEST_CASE("no control: everything is transmitted")
{
    const auto c = ensemble(500.0, 40.0);
    const auto g = Grid::spanning(-15.0, 0.0, 2001, 101);
    const auto r = simulate_storage(c, g, PulseShape{RisingExponential{1.0, 1.0, 0.0}}, ControlProfile::zero(g));
    CHECK(r.efficiency == 0.0);
    CHECK(r.energy_transmitted / r.energy_in == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.energy_residual == 0.0);
}

TEST_CASE("retrieval of a uniform spinwave follows the single-exponential oracle")
{
    // Uniform S stays uniform: dS/dt = -a S with a = d Gamma |Omega/Delta|^2 and
    // each port emits sqrt(d) |Omega/Delta| |S|.
    const double d = 80.0, delta = 20.0, omega = 1.5;
    const double a = d * omega * omega / (delta * delta);
    const auto c = ensemble(d, delta);
    const auto g = Grid::spanning(0.0, 4.0, 4001, 101);
    const auto control = ControlProfile::constant(g, omega, {{0.0, 4.0}});
    const ComplexVec s(101, Complex{1.0, 0.0});
    const auto r = simulate_retrieval(c, g, s, control);
    double worst = 0.0;
    for (std::size_t n = 0; n < g.nt; n += 50) {
        const double expected = std::sqrt(d) * omega / delta * std::exp(-a * g.time(n));
        worst = std::max(worst, std::abs(std::abs(r.e_out_plus[n]) - expected) / expected);
        CHECK(std::abs(r.e_out_plus[n]) == doctest::Approx(std::abs(r.e_out_minus[n])).epsilon(1e-12));
    }
    CHECK(worst < 1e-3);
    CHECK(r.efficiency == doctest::Approx(1.0 - std::exp(-2.0 * a * 4.0)).epsilon(1e-4));
}

TEST_CASE("retrieval converges as the time step shrinks")
{
    const double d = 80.0, delta = 20.0, omega = 1.5;
    const double a = d * omega * omega / (delta * delta);
    const auto c = ensemble(d, delta);
    const ComplexVec s(41, Complex{1.0, 0.0});
    auto error = [&](std::size_t nt) {
        const auto g = Grid::spanning(0.0, 2.0, nt, 41);
        const auto r = simulate_retrieval(c, g, s, ControlProfile::constant(g, omega, {{0.0, 2.0}}));
        return std::abs(std::abs(r.e_out_plus.back()) - std::sqrt(d) * omega / delta * std::exp(-2.0 * a));
    };
    const double coarse = error(41), fine = error(81);
    CHECK(fine < coarse);
    CHECK(coarse / fine > 8.0);  // fourth order in time
}

TEST_CASE("energy balances for random lossless runs")
{
    testgen::for_cases(21, 12, [](testgen::Gen& gen, int) {
        const double d = gen.log_uniform(10.0, 300.0);
        const double delta = gen.uniform(10.0, 60.0) * (gen.coin() ? 1.0 : -1.0);
        const double omega = gen.uniform(0.3, 2.0);
        const auto c = ensemble(d, delta);
        const auto g = Grid::spanning(-8.0, 6.0, 2801, 61);
        PulseShape p = gen.coin() ? PulseShape{RisingExponential{1.0, gen.uniform(0.3, 2.0), 0.0}}
                                  : PulseShape{GaussianPulse{1.0, -3.0, gen.uniform(0.5, 1.5)}};
        p.phase = gen.uniform(-3.0, 3.0);
        const auto control = ControlProfile::constant(g, std::polar(omega, gen.uniform(-3.0, 3.0)),
                                                      {{g.t0, 0.0}, {2.0, g.t_end()}});
        const auto r = simulate_storage(c, g, p, control);
        const double imbalance =
            (r.energy_in - r.energy_transmitted - r.energy_recalled - r.energy_residual) / r.energy_in;
        CHECK(std::abs(imbalance) < 1e-4);
        CHECK(r.efficiency >= 0.0);
        CHECK(r.efficiency <= 1.0);
    });
}

TEST_CASE("spinwave decay is booked in the ledger")
{
    auto c = ensemble(100.0, 10.0);
    c.gamma_s = 0.05;
    const auto g = Grid::spanning(-12.0, 10.0, 4401, 101);
    const auto control = ControlProfile::constant(g, 1.0, {{g.t0, 0.0}, {3.0, g.t_end()}});
    const auto r = simulate_storage(c, g, PulseShape{RisingExponential{1.0, 1.0, 0.0}}, control);
    CHECK(r.diagnostics.at("decay_loss") > 0.1);
    CHECK(std::abs(r.diagnostics.at("energy_balance_error")) < 1e-4);
}

TEST_CASE("storage is invariant to the input amplitude")
{
    const auto c = ensemble(100.0, 10.0);
    const auto g = Grid::spanning(-12.0, 0.0, 2401, 51);
    const auto control = ControlProfile::constant(g, 1.0, {{g.t0, 0.0}});
    PulseShape p{RisingExponential{1.0, 1.0, 0.0}};
    const auto base = simulate_storage(c, g, p, control);
    const auto q = p.scaled(7.0);
    const auto other = simulate_storage(c, g, q, control);
    CHECK(other.energy_residual == doctest::Approx(base.energy_residual).epsilon(1e-10));
    const Complex ratio = other.spinwave_final[20] / base.spinwave_final[20];
    CHECK(std::abs(ratio) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("phase mismatch spoils uniform driving")
{
    const auto c = ensemble(500.0, 40.0);
    const auto g = Grid::spanning(-15.0, 0.0, 3001, 201);
    const auto control = ControlProfile::constant(g, 40.0 / std::sqrt(500.0), {{g.t0, 0.0}});
    const PulseShape p{RisingExponential{1.0, 1.0, 0.0}};
    double previous = 0.0;
    for (double dk : {0.0, 0.5, 1.0, 2.0 * std::numbers::pi}) {
        const auto r = simulate_storage(c, g, p, control, {dk, 0.0});
        const double u = uniformity_metric(r.spinwave_final);
        CHECK(u >= previous);
        previous = u;
    }
    CHECK(previous >= 0.5);
}

TEST_CASE("opposite global phases interfere destructively")
{
    const auto c = ensemble(100.0, 10.0);
    const auto g = Grid::spanning(-12.0, 0.0, 2401, 101);
    const auto control = ControlProfile::constant(g, 1.0, {{g.t0, 0.0}});
    const PulseShape p{RisingExponential{1.0, 1.0, 0.0}};
    double best = 0.0, worst = 1.0;
    for (int k = 0; k < 8; ++k) {
        const auto r = simulate_storage(c, g, p, control, {0.0, 2.0 * std::numbers::pi * k / 8.0});
        best = std::max(best, r.energy_residual / r.energy_in);
        worst = std::min(worst, r.energy_residual / r.energy_in);
    }
    CHECK(best > 0.99);
    CHECK(worst < 0.01);
}

TEST_CASE("uniformity metric and spinwave energy")
{
    CHECK(spinwave_energy(ComplexVec(11, Complex{2.0, 0.0})) == doctest::Approx(4.0));
    CHECK(uniformity_metric(ComplexVec(5, Complex{0.0, 3.0})) == 0.0);
    ComplexVec s{Complex{2.0}, Complex{-1.0}, Complex{2.0}, Complex{-1.0}, Complex{2.0}};
    CHECK_THROWS_AS(uniformity_metric(ComplexVec{Complex{1.0}, Complex{-1.0}}), ConfigError);
    CHECK(uniformity_metric(s) > 1.0);
}
