#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "tracemem/core.hpp"

using namespace tracemem;

TEST_CASE("grid spanning covers both ends")
{
    const auto g = Grid::spanning(-2.0, 3.0, 11, 5);
    CHECK(g.dt == doctest::Approx(0.5));
    CHECK(g.time(0) == -2.0);
    CHECK(g.t_end() == doctest::Approx(3.0));
    CHECK(g.dz() == doctest::Approx(0.25));
    CHECK(g.z(4) == doctest::Approx(1.0));
    CHECK_THROWS_AS(Grid::spanning(1.0, 1.0, 10), ConfigError);
    CHECK_THROWS_AS(Grid::spanning(0.0, 1.0, 1), ConfigError);
}

TEST_CASE("validate_config reports every violation")
{
    EnsembleConfig c;
    c.optical_depth = -1.0;
    c.gamma_e = 0.0;
    c.gamma_s = -0.1;
    Grid g;
    g.nz = 1;
    g.dt = 0.0;
    const auto r = validate_config(c, g);
    CHECK_FALSE(r.ok());
    CHECK(r.violations.size() == 5);
    CHECK_THROWS_AS(require_valid(c, g), ConfigError);
}

TEST_CASE("validate_config warns outside the adiabatic regime and on coarse steps")
{
    EnsembleConfig c;
    c.optical_depth = 100.0;
    c.delta_plus = 5.0;
    c.delta_minus = -5.0;
    Grid g;
    g.dt = 0.1;
    const auto r = validate_config(c, g, 5.0);
    CHECK(r.ok());
    CHECK(r.warnings.size() == 2);
}

TEST_CASE("pulse envelopes and supports")
{
    PulseShape e{RisingExponential{2.0, 0.5, 1.0}};
    CHECK(std::abs(e.envelope(1.0) - Complex{2.0}) < 1e-15);
    CHECK(std::abs(e.envelope(-1.0) - Complex{2.0 * std::exp(-1.0)}) < 1e-15);
    CHECK(e.in_support(0.9));
    CHECK_FALSE(e.in_support(1.1));

    PulseShape g{GaussianPulse{1.0, 0.0, 2.0}};
    CHECK(std::abs(g.envelope(2.0)) == doctest::Approx(std::exp(-0.5)));
    CHECK(g.in_support(1e6));

    PulseShape s{SampledPulse{0.0, 1.0, {Complex{0.0}, Complex{2.0}, Complex{4.0}}}};
    CHECK(s.envelope(1.5).real() == doctest::Approx(3.0));
    CHECK(s.support().second == doctest::Approx(2.0));
    CHECK(s.scaled(0.5).envelope(2.0).real() == doctest::Approx(2.0));
}

TEST_CASE("input energy of a rising exponential matches the closed form")
{
    // Both ports carry |C|^2 exp(2 k (t - t_c)): total 2 * |C|^2 / (2 k).
    const auto g = Grid::spanning(-30.0, 0.0, 30001);
    PulseShape p{RisingExponential{1.5, 0.8, 0.0}};
    CHECK(input_energy(p, g) == doctest::Approx(1.5 * 1.5 / 0.8).epsilon(1e-6));
}

TEST_CASE("trapezoid rules are exact for linear integrands")
{
    testgen::for_cases(11, 20, [](testgen::Gen& gen, int) {
        const double a = gen.uniform(-3, 3), b = gen.uniform(-3, 3), h = gen.uniform(0.01, 0.5);
        const int n = gen.integer(2, 50);
        std::vector<double> f(n);
        ComplexVec fc(n);
        for (int i = 0; i < n; ++i) {
            f[i] = a + b * i * h;
            fc[i] = Complex{f[i], -f[i]};
        }
        const double length = (n - 1) * h;
        const double exact = a * length + 0.5 * b * length * length;
        CHECK(trapezoid(f, h) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(trapezoid(fc, h).imag() == doctest::Approx(-exact).epsilon(1e-12));
        ComplexVec cum(n);
        cumulative_trapezoid(fc, h, cum);
        CHECK(cum.back().real() == doctest::Approx(exact).epsilon(1e-12));
    });
}

TEST_CASE("control profiles honour their gate windows")
{
    const auto g = Grid::spanning(0.0, 10.0, 11);
    const auto c = ControlProfile::constant(g, Complex{2.0, 1.0}, {{2.0, 4.0}, {7.0, 7.0}});
    CHECK(c.omega[1] == Complex{});
    CHECK(c.omega[2] == Complex{2.0, 1.0});
    CHECK(c.omega[4] == Complex{2.0, 1.0});
    CHECK(c.omega[5] == Complex{});
    CHECK(c.omega[7] == Complex{2.0, 1.0});
    CHECK(c.grid(7).nz == 7);
    CHECK(c.t_end() == doctest::Approx(10.0));
    const auto z = ControlProfile::zero(g);
    CHECK(z.schedule.empty());
}

TEST_CASE("field state shape checks")
{
    auto f = FieldState::zeros(5, true);
    CHECK_NOTHROW(f.check_shape());
    CHECK(f.finite());
    f.p_plus.clear();
    CHECK_NOTHROW(f.check_shape());
    f.e_plus.resize(4);
    CHECK_THROWS_AS(f.check_shape(), ConfigError);
    f = FieldState::zeros(3);
    f.s[1] = Complex{NAN, 0.0};
    CHECK_FALSE(f.finite());
}
