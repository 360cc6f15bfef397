// drive.hpp - per-step sampling of inputs and controls for the time steppers.
//
// Gates and input supports are resolved per grid step from the step midpoint,
// so a window edge that falls on a grid node never splits a step.

#pragma once

#include <array>
#include <optional>

#include "tracemem/core.hpp"

namespace tracemem::detail {

struct StageDrive {
    Complex ein_plus;
    Complex ein_minus;
    Complex omega;
};

class DriveSampler {
public:
    DriveSampler(const Grid& grid, PortInputs inputs, const ControlProfile& control)
        : grid_(grid), inputs_(std::move(inputs)), control_(control)
    {
    }

    // Drive at t_n + frac * dt for grid step n, frac in [0, 1].
    StageDrive at(std::size_t n, double frac) const
    {
        const double t_mid = grid_.time(n) + 0.5 * grid_.dt;
        const double t = grid_.time(n) + frac * grid_.dt;
        StageDrive d;
        if (inputs_.plus && inputs_.plus->in_support(t_mid)) {
            d.ein_plus = inputs_.plus->envelope(t) * std::polar(1.0, inputs_.plus->phase);
        }
        if (inputs_.minus && inputs_.minus->in_support(t_mid)) {
            d.ein_minus = inputs_.minus->envelope(t) * std::polar(1.0, inputs_.minus->phase);
        }
        if (control_.gate_open(t_mid) && n + 1 < control_.omega.size()) {
            d.omega = (1.0 - frac) * control_.omega[n] + frac * control_.omega[n + 1];
        }
        return d;
    }

    // Right-limit drive at node n (used for recorded envelopes).
    StageDrive at_node(std::size_t n) const
    {
        if (n + 1 < grid_.nt) return at(n, 0.0);
        return at(n - 1, 1.0);
    }

private:
    Grid grid_;
    PortInputs inputs_;
    const ControlProfile& control_;
};

}  // namespace tracemem::detail
