// shaping.hpp - impedance-matched control profiles for storage.

#pragma once

#include "tracemem/core.hpp"

namespace tracemem::shaping {

enum class ClosedForm {
    // Omega = Delta / sqrt(2 d Gamma) * |E(t)| / sqrt(int_{-inf}^t |E|^2)
    squared_integrand,
    // Omega^2 = Delta^2 |E(t)| / (2 d Gamma int_{-inf}^t |E|), comparison only
    linear_integrand,
};

const char* to_string(ClosedForm form);

struct ShapingOptions {
    ClosedForm form = ClosedForm::squared_integrand;
    // Largest two-photon rate d Gamma (Omega / Delta)^2 allowed at the onset.
    double bandwidth_limit = 10.0;
    // Samples whose running integral is below this fraction of the total are capped.
    double onset_fraction = 1e-6;
    // Largest rate * dt accepted before the grid is declared too coarse.
    double max_rate_step = 0.2;
    // Run adiabatic storage on the result and measure the leakage.
    bool validate = true;
};

struct ShapingResult {
    ControlProfile omega;
    double residual_output_fraction = 0.0;  // leaked / input energy; NaN if not validated
    ClosedForm closed_form_used = ClosedForm::squared_integrand;
};

// Control that stores `input` without leakage. The gate is open from the grid
// start to the end of the input support (or the grid end). A complex input
// passes its phase evolution to the control.
ShapingResult shape_control(const EnsembleConfig& config, const Grid& grid, const PulseShape& input,
                            const ShapingOptions& options = {});

enum class PredictionRate {
    validated,  // a = d Gamma (Omega / Delta)^2
    printed,    // 2 a
};

// Output of a memory that has absorbed everything before the grid start:
//   E_out(t) = E_in(t) - c d Gamma (Omega(t)/Delta) int_{t0}^t (Omega(t')/Delta) E_in(t') dt'
// with c = 1 (validated) or 2 (printed). E_in is the full two-port input,
// twice the per-port envelope. Sampled on the control's grid.
ComplexVec output_prediction(const EnsembleConfig& config, const PulseShape& input, const ControlProfile& control,
                             PredictionRate rate = PredictionRate::validated);

// Extends `control` so the gate closes at the end of its last window and
// reopens `hold` later for `recall_duration`, with the last open value of the
// storage control. hold = +inf never reopens; the record still grows by
// recall_duration. Durations are rounded to whole samples.
ControlProfile recall_schedule(const ControlProfile& control, double hold, double recall_duration);

}  // namespace tracemem::shaping
