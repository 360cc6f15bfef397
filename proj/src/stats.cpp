#include "tracemem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <unsupported/Eigen/NonLinearOptimization>

#include "tracemem/core.hpp"
#include "tracemem/parallel.hpp"

namespace tracemem::stats {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_phase(double x)
{
    x = std::remainder(x, kTwoPi);
    return x <= -M_PI ? x + kTwoPi : x;
}

struct CircularStats {
    double mean = 0.0;
    double spread = 0.0;
};

CircularStats circular(const std::vector<double>& angles)
{
    double c = 0.0;
    double s = 0.0;
    for (double a : angles) {
        c += std::cos(a);
        s += std::sin(a);
    }
    const double n = static_cast<double>(angles.size());
    const double r = std::min(1.0, std::hypot(c, s) / n);
    return {wrap_phase(std::atan2(s, c)), r > 0.0 ? std::sqrt(-2.0 * std::log(r)) : INFINITY};
}

// Residuals of the decay model in scaled time s = t / ts with parameters
// (eta0, rate_e * ts, rate_g * ts^2).
struct DecayFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    std::vector<double> s;
    std::vector<double> eta;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(s.size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const
    {
        for (std::size_t i = 0; i < s.size(); ++i) {
            f(static_cast<Eigen::Index>(i)) = p(0) * std::exp(-p(1) * s[i] - p(2) * s[i] * s[i]) - eta[i];
        }
        return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const
    {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double e = std::exp(-p(1) * s[i] - p(2) * s[i] * s[i]);
            j(r, 0) = e;
            j(r, 1) = -s[i] * p(0) * e;
            j(r, 2) = -s[i] * s[i] * p(0) * e;
        }
        return 0;
    }
};

// 1/e time of a decay curve, interpolated in log space; extrapolated from a
// log-linear fit when the data never fall that far.
double one_over_e_time(const std::vector<DecayPoint>& pts)
{
    const double target = pts.front().eta / std::exp(1.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].eta <= target) {
            const double la = std::log(pts[i - 1].eta);
            const double lb = std::log(pts[i].eta);
            const double f = lb != la ? (std::log(target) - la) / (lb - la) : 0.0;
            return pts[i - 1].t + f * (pts[i].t - pts[i - 1].t);
        }
    }
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (const auto& p : pts) {
        const double l = std::log(p.eta);
        st += p.t;
        sl += l;
        stt += p.t * p.t;
        stl += p.t * l;
    }
    const double n = static_cast<double>(pts.size());
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    return slope < 0.0 ? -1.0 / slope : 10.0 * pts.back().t;
}

}  // namespace

// ---------------------------------------------------------------------------

double DecayFit::sigma(int i) const { return std::sqrt(covariance[i][i]); }
double DecayFit::rate_sigma(int i) const { return std::sqrt(rate_covariance[i][i]); }

double decay_model(double t, double eta0, double tau_e, double tau_g)
{
    const double g = std::isinf(tau_g) ? 0.0 : t / tau_g;
    return eta0 * std::exp(-t / tau_e - g * g);
}

DecayFit fit_decay(const std::vector<DecayPoint>& curve)
{
    if (curve.size() < 4) throw FitError(fmt::format("insufficient data: {} points, need at least 4", curve.size()));
    std::vector<DecayPoint> pts = curve;
    for (const auto& p : pts) {
        if (!std::isfinite(p.t) || p.t < 0.0) throw ConfigError("decay times must be finite and nonnegative");
        if (!(p.eta > 0.0 && p.eta <= 1.0)) throw ConfigError("decay efficiencies must lie in (0, 1]");
    }
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.eta < b.eta; });
    if (hi->eta - lo->eta <= 1e-12 * hi->eta) throw FitError("degenerate data: all efficiencies equal");
    const double ts = pts.back().t;
    if (!(ts > 0.0)) throw FitError("degenerate data: all times equal");

    DecayFunctor fn;
    for (const auto& p : pts) {
        fn.s.push_back(p.t / ts);
        fn.eta.push_back(p.eta);
    }
    const double tau = one_over_e_time(pts);
    Eigen::VectorXd x(3);
    x << pts.front().eta, ts / (2.0 * tau), ts * ts / (2.0 * tau * tau);

    Eigen::LevenbergMarquardt<DecayFunctor> lm(fn);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;
    const auto status = lm.minimize(x);
    using S = Eigen::LevenbergMarquardtSpace::Status;
    const bool converged = status == S::RelativeReductionTooSmall || status == S::RelativeErrorTooSmall ||
                           status == S::RelativeErrorAndReductionTooSmall || status == S::CosinusTooSmall ||
                           status == S::FtolTooSmall || status == S::XtolTooSmall;
    if (!converged || !x.allFinite()) {
        throw FitError(fmt::format("decay fit did not converge (status {})", static_cast<int>(status)));
    }
    if (!(x(0) > 0.0) || !(x(1) > 0.0)) {
        throw FitError(fmt::format("decay fit unphysical: eta0 = {:.4g}, exponential rate = {:.4g}", x(0), x(1) / ts));
    }

    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::VectorXd f(n);
    Eigen::MatrixXd j(n, 3);
    fn(x, f);
    fn.df(x, j);
    const double dof = static_cast<double>(n) - 3.0;
    const double s2 = dof > 0.0 ? f.squaredNorm() / dof : 0.0;
    Eigen::Matrix3d cov_scaled = s2 * (j.transpose() * j).inverse();
    // Back to physical rates.
    const Eigen::Vector3d scale(1.0, 1.0 / ts, 1.0 / (ts * ts));
    const Eigen::Matrix3d rate_cov = scale.asDiagonal() * cov_scaled * scale.asDiagonal();

    DecayFit out;
    out.rates = {x(0), x(1) / ts, x(2) / (ts * ts)};
    out.eta0 = out.rates[0];
    out.tau_e = 1.0 / out.rates[1];
    out.tau_g = out.rates[2] > 0.0 ? 1.0 / std::sqrt(out.rates[2]) : INFINITY;
    // Delta method: tau_e = 1/r_e, tau_g = r_g^(-1/2).
    Eigen::Vector3d grad(1.0, -out.tau_e * out.tau_e, out.rates[2] > 0.0 ? -0.5 * std::pow(out.rates[2], -1.5) : 0.0);
    const Eigen::Matrix3d cov = grad.asDiagonal() * rate_cov * grad.asDiagonal();
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            out.rate_covariance[a][b] = rate_cov(a, b);
            out.covariance[a][b] = cov(a, b);
        }
    }
    out.residual_rms = std::sqrt(f.squaredNorm() / static_cast<double>(n));
    out.iterations = static_cast<int>(lm.iter);
    return out;
}

// ---------------------------------------------------------------------------

const char* channel_name(int channel)
{
    switch (channel) {
    case forward_transmitted: return "forward_transmitted";
    case backward_transmitted: return "backward_transmitted";
    case forward_recalled: return "forward_recalled";
    case backward_recalled: return "backward_recalled";
    }
    return "unknown";
}

void FringeDataset::check() const
{
    const std::size_t n = imposed_phase.size();
    if (pulse_index.size() != n || run_id.size() != n) throw ConfigError("fringe dataset columns differ in length");
    for (int c = 0; c < kChannels; ++c) {
        if (!has(c)) continue;
        if (energies[c].size() != n) throw ConfigError(fmt::format("channel {} has the wrong length", channel_name(c)));
        for (double e : energies[c]) {
            if (!std::isfinite(e) || e < 0.0) {
                throw ConfigError(fmt::format("channel {} has a negative or non-finite energy", channel_name(c)));
            }
        }
    }
    for (double p : imposed_phase) {
        if (!std::isfinite(p)) throw ConfigError("non-finite imposed phase");
    }
}

Sinusoid fit_sinusoid(const std::vector<double>& phase, const std::vector<double>& value)
{
    if (phase.size() != value.size()) throw ConfigError("sinusoid fit: length mismatch");
    if (phase.size() < 3) throw FitError("sinusoid fit needs at least three points");
    const auto n = static_cast<Eigen::Index>(phase.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = std::cos(phase[static_cast<std::size_t>(i)]);
        a(i, 2) = std::sin(phase[static_cast<std::size_t>(i)]);
        y(i) = value[static_cast<std::size_t>(i)];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 3) throw FitError("sinusoid fit: phases do not resolve a fringe");
    const Eigen::Vector3d c = qr.solve(y);
    Sinusoid s;
    s.offset = c(0);
    s.amplitude = std::hypot(c(1), c(2));
    s.phase = wrap_phase(std::atan2(c(2), c(1)));
    s.residual_rms = std::sqrt((a * c - y).squaredNorm() / static_cast<double>(n));
    return s;
}

FringeFit fit_fringe(const FringeDataset& dataset)
{
    dataset.check();
    if (!dataset.has(forward_transmitted)) throw ConfigError("fringe dataset lacks the forward transmitted channel");

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) groups[dataset.run_id[i]].push_back(i);
    if (groups.empty()) throw FitError("fringe dataset is empty");

    FringeFit fit;
    std::array<std::vector<double>, kChannels> diffs;
    std::array<std::vector<double>, kChannels> phases;
    std::array<double, kChannels> amp{}, off{}, rms{};
    for (const auto& [id, idx] : groups) {
        std::vector<double> phi;
        for (auto i : idx) phi.push_back(dataset.imposed_phase[i]);
        const auto [mn, mx] = std::minmax_element(phi.begin(), phi.end());
        if (*mx - *mn < 4.0 * M_PI - 1e-9) {
            throw FitError(fmt::format("insufficient phase coverage in run {}: {:.3g} rad, need 4 pi", id, *mx - *mn));
        }
        RunFringe run;
        run.run_id = id;
        for (int c = 0; c < kChannels; ++c) {
            if (!dataset.has(c)) continue;
            std::vector<double> y;
            for (auto i : idx) y.push_back(dataset.energies[c][i]);
            const Sinusoid s = fit_sinusoid(phi, y);
            const double floor = 2.0 * s.residual_rms * std::sqrt(2.0 / static_cast<double>(y.size()));
            if (s.amplitude <= std::max(floor, 1e-9 * std::abs(s.offset)) || s.amplitude == 0.0) {
                throw FitError(fmt::format("zero-amplitude channel {} in run {}", channel_name(c), id));
            }
            run.channels[c] = s;
        }
        for (int c = 0; c < kChannels; ++c) {
            if (!run.channels[c]) continue;
            diffs[c].push_back(wrap_phase(run.channels[c]->phase - run.channels[forward_transmitted]->phase));
            phases[c].push_back(run.channels[c]->phase);
            amp[c] += run.channels[c]->amplitude;
            off[c] += run.channels[c]->offset;
            rms[c] += run.channels[c]->residual_rms;
        }
        fit.runs.push_back(std::move(run));
    }
    const double runs = static_cast<double>(fit.runs.size());
    for (int c = 0; c < kChannels; ++c) {
        if (diffs[c].empty()) continue;
        const auto d = circular(diffs[c]);
        fit.phase_differences[c] = d.mean;
        fit.phase_difference_spread[c] = d.spread;
        fit.channels[c] = Sinusoid{off[c] / runs, amp[c] / runs, circular(phases[c]).mean, rms[c] / runs};
    }
    const auto& ref = *fit.channels[forward_transmitted];
    fit.visibility = std::clamp(ref.amplitude / ref.offset, 0.0, 1.0);
    return fit;
}

// ---------------------------------------------------------------------------

void InterferenceModel::check() const
{
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(noise_sigma)) {
        throw ConfigError("interference model parameters must be finite");
    }
    if (b < 0.0 || a < b) throw ConfigError("interference model needs a >= b >= 0");
    if (noise_sigma < 0.0) throw ConfigError("noise sigma must be nonnegative");
}

Moments ensemble_moments(const InterferenceModel& m)
{
    m.check();
    const double s2 = m.noise_sigma * m.noise_sigma;
    return {m.a, m.a * m.a * s2 + m.b * m.b * (1.0 + s2) / 2.0};
}

std::vector<double> simulate_interference_ensemble(const InterferenceModel& model, std::size_t n, std::uint64_t seed)
{
    model.check();
    if (n < 1) throw ConfigError("ensemble size must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> theta(0.0, kTwoPi);
    std::normal_distribution<double> lambda(1.0, model.noise_sigma > 0.0 ? model.noise_sigma : 1.0);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double th = theta(rng);
        const double l = model.noise_sigma > 0.0 ? lambda(rng) : 1.0;
        x = l * (model.a + model.b * std::sin(th));
    }
    return out;
}

double binned_negative_log_likelihood(const InterferenceModel& m, const std::vector<double>& edges,
                                      const std::vector<double>& counts, std::size_t quadrature)
{
    const std::size_t nb = counts.size();
    std::vector<double> prob(nb, 0.0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < quadrature; ++k) {
        const double s = std::cos((2.0 * static_cast<double>(k) + 1.0) * M_PI / (2.0 * static_cast<double>(quadrature)));
        const double u = m.a + m.b * s;
        const double sd = std::abs(u) * m.noise_sigma;
        // cdf(x) of N(u, sd); the outer bins extend to +-inf.
        auto cdf = [&](std::size_t e) {
            if (e == 0) return 0.0;
            if (e == nb) return 1.0;
            const double x = edges[e];
            if (sd <= 0.0) return x >= u ? 1.0 : 0.0;
            const double z = (x - u) / sd;
            if (z < -7.0) return 0.0;
            if (z > 7.0) return 1.0;
            return 0.5 * std::erfc(-z * inv_sqrt2);
        };
        // Only edges within 7 sd of u see a partial step.
        const double lo_x = u - 7.0 * sd;
        const double hi_x = u + 7.0 * sd;
        auto first = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), lo_x) - edges.begin());
        auto last = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), hi_x) - edges.begin());
        first = std::min(first > 0 ? first - 1 : 0, nb - 1);
        last = std::max(std::min(last, nb), first + 1);
        double prev = cdf(first);
        for (std::size_t b = first; b < last; ++b) {
            const double next = cdf(b + 1);
            prob[b] += next - prev;
            prev = next;
        }
    }
    double nll = 0.0;
    const double w = 1.0 / static_cast<double>(quadrature);
    for (std::size_t b = 0; b < nb; ++b) {
        if (counts[b] > 0.0) nll -= counts[b] * std::log(std::max(prob[b] * w, 1e-300));
    }
    return nll;
}

namespace {

struct BinnedData {
    std::vector<double> edges;  // nb + 1, the outer two only nominal
    std::vector<double> counts;
    std::size_t quadrature = 0;
};

std::vector<double> histogram(const std::vector<double>& x, const std::vector<double>& edges)
{
    std::vector<double> counts(edges.size() - 1, 0.0);
    const std::size_t nb = counts.size();
    for (double v : x) {
        auto i = static_cast<std::size_t>(std::upper_bound(edges.begin() + 1, edges.end() - 1, v) - edges.begin() - 1);
        counts[std::min(i, nb - 1)] += 1.0;
    }
    return counts;
}

struct Objective {
    const BinnedData* data;
    const std::vector<double>* counts;
};

// Unconstrained coordinates: a = |x0|, b = a * tri(x1) with tri folding the
// line onto [0, 1], noise_sigma = exp(x2).
double fold_unit(double x)
{
    const double f = x - 2.0 * std::floor(0.5 * x);
    return 1.0 - std::abs(1.0 - f);
}

InterferenceModel decode(const gsl_vector* x)
{
    const double a = std::abs(gsl_vector_get(x, 0));
    return {a, a * fold_unit(gsl_vector_get(x, 1)), std::exp(std::max(gsl_vector_get(x, 2), -30.0))};
}

double objective(const gsl_vector* x, void* params)
{
    const auto* o = static_cast<const Objective*>(params);
    const InterferenceModel m = decode(x);
    if (!(m.a > 0.0)) return 1e100;
    return binned_negative_log_likelihood(m, o->data->edges, *o->counts, o->data->quadrature);
}

struct MlFit {
    InterferenceModel model;
    double nll = 0.0;
};

MlFit maximize(const BinnedData& data, const std::vector<double>& counts, const InterferenceModel& start, double step,
               double tolerance)
{
    Objective obj{&data, &counts};
    gsl_multimin_function f{&objective, 3, &obj};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* ss = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, start.a);
    gsl_vector_set(x, 1, start.a > 0.0 ? start.b / start.a : 0.5);
    gsl_vector_set(x, 2, std::log(std::max(start.noise_sigma, 1e-6)));
    gsl_vector_set(ss, 0, step * start.a);
    gsl_vector_set(ss, 1, step);
    gsl_vector_set(ss, 2, 0.5);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(s, &f, x, ss);
    int status = GSL_CONTINUE;
    for (int it = 0; it < 4000 && status == GSL_CONTINUE; ++it) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tolerance);
    }
    MlFit out{decode(s->x), s->fval};
    const double size = gsl_multimin_fminimizer_size(s);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(ss);
    if (status != GSL_SUCCESS) {
        throw FitError(fmt::format("efficiency likelihood maximization did not converge (a={:.6g} b={:.6g} sigma={:.6g} size={:.3g})",
                                   out.model.a, out.model.b, out.model.noise_sigma, size));
    }
    if (out.model.a < 0.0 || out.model.b < 0.0 || !std::isfinite(out.nll)) throw FitError("negative parameter estimate");
    return out;
}

double quantile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
}

}  // namespace

EfficiencyEstimate estimate_efficiency(const std::vector<double>& samples, const EstimateOptions& options)
{
    if (samples.size() < 100) {
        throw ConfigError(fmt::format("insufficient samples: {} (need at least 100)", samples.size()));
    }
    for (double v : samples) {
        if (!std::isfinite(v)) throw ConfigError("non-finite sample");
    }
    if (!(options.confidence > 0.0 && options.confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    EfficiencyEstimate est;
    if (*mx - *mn <= 1e-12 * std::max(1.0, std::abs(mean))) {
        if (!(mean > 0.0)) throw FitError("negative parameter estimate");
        est.model = {mean, 0.0, 0.0};
        est.efficiency = est.ci_low = est.ci_high = mean;
        return est;
    }

    BinnedData data;
    const std::size_t nb = std::clamp<std::size_t>(static_cast<std::size_t>(2.0 * std::sqrt(samples.size())), 30, 120);
    const double range = *mx - *mn;
    data.edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) {
        data.edges[i] = *mn - 0.01 * range + 1.02 * range * static_cast<double>(i) / static_cast<double>(nb);
    }
    data.quadrature = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(M_PI * static_cast<double>(nb))), 64, 1024);
    data.counts = histogram(samples, data.edges);

    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size() - 1);
    InterferenceModel start{mean, std::min(0.9 * mean, std::sqrt(2.0 * var)), 0.1};
    const MlFit best = maximize(data, data.counts, start, 0.2, 1e-6);

    // Resamples are refit from the estimate with quadrature sized to the
    // fitted kernel: node spacing b pi / M at most half the bin or noise width.
    BinnedData boot_data = data;
    const double width = std::max(data.edges[1] - data.edges[0], best.model.a * best.model.noise_sigma);
    boot_data.quadrature = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(2.0 * M_PI * best.model.b / width)), 32, data.quadrature);

    const auto boots = parallel_map(options.bootstrap, options.jobs, [&](std::size_t k) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
        std::vector<double> resample(samples.size());
        for (auto& v : resample) v = samples[pick(rng)];
        const auto counts = histogram(resample, data.edges);
        const MlFit f = maximize(boot_data, counts, best.model, 0.05, 1e-5);
        return f.model.a + f.model.b;
    });

    est.model = best.model;
    est.efficiency = best.model.a + best.model.b;
    est.log_likelihood = -best.nll;
    est.bins = nb;
    est.quadrature = data.quadrature;
    if (!boots.empty()) {
        est.ci_low = quantile(boots, 0.5 * (1.0 - options.confidence));
        est.ci_high = quantile(boots, 0.5 * (1.0 + options.confidence));
    } else {
        est.ci_low = est.ci_high = est.efficiency;
    }
    return est;
}

// ---------------------------------------------------------------------------

Visibility visibility(double constructive, double destructive, double total_input)
{
    if (!(total_input > 0.0)) throw ConfigError("visibility needs a positive total input energy");
    if (!(constructive >= 0.0) || !(destructive >= 0.0)) throw ConfigError("visibility needs nonnegative energies");
    const double sum = constructive + destructive;
    return {(constructive - destructive) / total_input, sum > 0.0 ? (constructive - destructive) / sum : 0.0};
}

RunVisibility run_visibility(const std::vector<double>& energies, const std::vector<int>& run_id, double total_input)
{
    if (energies.size() != run_id.size() || energies.empty()) throw ConfigError("run visibility needs matching, nonempty columns");
    std::map<int, std::pair<double, double>> ext;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        auto [it, fresh] = ext.try_emplace(run_id[i], energies[i], energies[i]);
        if (!fresh) {
            it->second.first = std::max(it->second.first, energies[i]);
            it->second.second = std::min(it->second.second, energies[i]);
        }
    }
    double hi = 0.0, lo = 0.0;
    for (const auto& [id, e] : ext) {
        hi += e.first;
        lo += e.second;
    }
    const double n = static_cast<double>(ext.size());
    const auto [gmin, gmax] = std::minmax_element(energies.begin(), energies.end());
    return {visibility(hi / n, lo / n, total_input), visibility(*gmax, *gmin, total_input)};
}

double integrate_window(const std::vector<double>& trace, double t0, double dt, double t_begin, double t_end)
{
    if (!(dt > 0.0)) throw ConfigError("trace sample spacing must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = t0 + dt * static_cast<double>(i);
        if (t >= t_begin && t < t_end) acc += trace[i];
    }
    return acc * dt;
}

}  // namespace tracemem::stats
