// efficiency.hpp - closed-form efficiency limits of three memory schemes.

#pragma once

#include <string>
#include <vector>

namespace tracemem::efficiency {

enum class Scheme { cavity, trace, freespace_raman };

const char* to_string(Scheme scheme);

struct EfficiencyCurve {
    Scheme scheme = Scheme::trace;
    std::vector<double> abscissa;    // C for cavity, d otherwise; strictly increasing
    std::vector<double> efficiency;  // in [0, 1]
};

// max(0, 1 - 2/C); C > 0.
double cavity_efficiency(double cooperativity);

// (d / (d + 2))^2 for storage followed by retrieval; d >= 0.
double trace_efficiency(double optical_depth);

// Single pass d / (d + 2).
double trace_single_pass(double optical_depth);

// max(0, 1 - 5.8/d); d > 0.
double freespace_raman_efficiency(double optical_depth);

// n points log-spaced over [lo, hi], endpoints exact.
std::vector<double> log_range(double lo, double hi, std::size_t n);

// The three curves; the trace and free-space curves share d_range.
std::vector<EfficiencyCurve> figure1b_dataset(const std::vector<double>& d_range,
                                              const std::vector<double>& c_range);

}  // namespace tracemem::efficiency
