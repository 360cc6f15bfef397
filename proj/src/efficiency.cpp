#include "tracemem/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tracemem/core.hpp"

namespace tracemem::efficiency {

namespace {

void require_increasing(const std::vector<double>& v, const char* name)
{
    if (v.empty()) throw ConfigError(fmt::format("empty {} range", name));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw ConfigError(fmt::format("non-finite value in {} range", name));
        if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(fmt::format("{} range must be strictly increasing", name));
    }
}

EfficiencyCurve tabulate(Scheme scheme, const std::vector<double>& x, double (*f)(double))
{
    EfficiencyCurve c;
    c.scheme = scheme;
    c.abscissa = x;
    c.efficiency.reserve(x.size());
    for (double v : x) c.efficiency.push_back(std::clamp(f(v), 0.0, 1.0));
    return c;
}

}  // namespace

const char* to_string(Scheme scheme)
{
    switch (scheme) {
    case Scheme::cavity: return "cavity";
    case Scheme::trace: return "trace";
    case Scheme::freespace_raman: return "freespace-raman";
    }
    return "unknown";
}

double cavity_efficiency(double cooperativity)
{
    if (!(cooperativity > 0.0)) throw ConfigError("cooperativity must be positive");
    if (std::isinf(cooperativity)) return 1.0;
    return std::max(0.0, 1.0 - 2.0 / cooperativity);
}

double trace_single_pass(double optical_depth)
{
    if (!(optical_depth >= 0.0)) throw ConfigError("optical depth must be nonnegative");
    if (std::isinf(optical_depth)) return 1.0;
    return optical_depth / (optical_depth + 2.0);
}

double trace_efficiency(double optical_depth)
{
    const double e = trace_single_pass(optical_depth);
    return e * e;
}

double freespace_raman_efficiency(double optical_depth)
{
    if (!(optical_depth > 0.0)) throw ConfigError("optical depth must be positive");
    if (std::isinf(optical_depth)) return 1.0;
    return std::max(0.0, 1.0 - 5.8 / optical_depth);
}

std::vector<double> log_range(double lo, double hi, std::size_t n)
{
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ConfigError("log range needs 0 < lo < hi and n >= 2");
    std::vector<double> v(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

std::vector<EfficiencyCurve> figure1b_dataset(const std::vector<double>& d_range, const std::vector<double>& c_range)
{
    require_increasing(d_range, "optical depth");
    require_increasing(c_range, "cooperativity");
    return {tabulate(Scheme::cavity, c_range, cavity_efficiency),
            tabulate(Scheme::trace, d_range, trace_efficiency),
            tabulate(Scheme::freespace_raman, d_range, freespace_raman_efficiency)};
}

}  // namespace tracemem::efficiency
