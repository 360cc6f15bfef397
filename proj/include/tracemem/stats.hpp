// stats.hpp - decay, fringe and output-energy statistics.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tracemem::stats {

// ---------------------------------------------------------------------------
// Decay curves: eta(t) = eta0 * exp(-t/tau_e - (t/tau_g)^2)

struct DecayPoint {
    double t = 0.0;
    double eta = 0.0;
};

struct DecayFit {
    double eta0 = 0.0;
    double tau_e = 0.0;
    double tau_g = 0.0;  // +inf when the Gaussian rate is not positive
    // Covariance of (eta0, tau_e, tau_g), propagated from rate_covariance.
    std::array<std::array<double, 3>, 3> covariance{};
    // Fit parameters (eta0, 1/tau_e, 1/tau_g^2) and their covariance.
    std::array<double, 3> rates{};
    std::array<std::array<double, 3>, 3> rate_covariance{};
    double residual_rms = 0.0;
    int iterations = 0;

    double sigma(int i) const;       // sqrt(covariance[i][i])
    double rate_sigma(int i) const;  // sqrt(rate_covariance[i][i])
};

double decay_model(double t, double eta0, double tau_e, double tau_g);

// Levenberg-Marquardt fit. Needs >= 4 points with t >= 0 and eta in (0, 1].
DecayFit fit_decay(const std::vector<DecayPoint>& curve);

// ---------------------------------------------------------------------------
// Fringes of phase-incremented pulse trains

enum Channel : int { forward_transmitted = 0, backward_transmitted = 1, forward_recalled = 2, backward_recalled = 3 };
inline constexpr int kChannels = 4;
const char* channel_name(int channel);

struct FringeDataset {
    std::vector<int> pulse_index;
    std::vector<double> imposed_phase;  // radians, monotone within a run
    // Per channel, one energy per pulse; an empty vector marks an absent channel.
    std::array<std::vector<double>, kChannels> energies;
    std::vector<int> run_id;

    std::size_t size() const { return imposed_phase.size(); }
    bool has(int channel) const { return !energies[channel].empty(); }
    // Throws ConfigError on inconsistent lengths or negative energies.
    void check() const;
};

struct Sinusoid {
    double offset = 0.0;
    double amplitude = 0.0;  // >= 0
    double phase = 0.0;      // in (-pi, pi]; value = offset + amplitude cos(phi - phase)
    double residual_rms = 0.0;
};

// Linear least squares for offset + alpha cos(phi) + beta sin(phi).
Sinusoid fit_sinusoid(const std::vector<double>& phase, const std::vector<double>& value);

struct RunFringe {
    int run_id = 0;
    std::array<std::optional<Sinusoid>, kChannels> channels;
};

struct FringeFit {
    std::vector<RunFringe> runs;
    // Per channel, averaged over runs: amplitude, offset, circular-mean phase.
    std::array<std::optional<Sinusoid>, kChannels> channels;
    // Circular mean over runs of phase(channel) - phase(forward transmitted).
    std::array<std::optional<double>, kChannels> phase_differences;
    std::array<std::optional<double>, kChannels> phase_difference_spread;
    double visibility = 0.0;  // amplitude / offset of the reference channel
};

// Each run needs >= 4 pi of imposed-phase coverage and the forward transmitted
// channel. Throws FitError for insufficient coverage or a channel whose
// amplitude is not resolved above the residual noise.
FringeFit fit_fringe(const FringeDataset& dataset);

// ---------------------------------------------------------------------------
// Output-energy distribution lambda (a + b sin theta)

struct InterferenceModel {
    double a = 0.0;
    double b = 0.0;
    double noise_sigma = 0.0;

    void check() const;  // a >= b >= 0, noise_sigma >= 0, finite
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// mean a, variance a^2 s^2 + b^2 (1 + s^2) / 2
Moments ensemble_moments(const InterferenceModel& model);

// theta ~ U[0, 2 pi), lambda ~ N(1, noise_sigma); deterministic for a seed.
std::vector<double> simulate_interference_ensemble(const InterferenceModel& model, std::size_t n, std::uint64_t seed);

struct EstimateOptions {
    std::size_t bootstrap = 1000;
    double confidence = 0.95;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct EfficiencyEstimate {
    InterferenceModel model;
    double efficiency = 0.0;  // a + b
    double ci_low = 0.0;
    double ci_high = 0.0;
    double log_likelihood = 0.0;
    std::size_t bins = 0;
    std::size_t quadrature = 0;
};

// Maximum likelihood over (a, b, noise_sigma) on a fixed histogram with exact
// bin probabilities (theta marginal by Gauss-Chebyshev quadrature in sin theta),
// plus a percentile bootstrap interval for a + b. Needs >= 100 samples.
EfficiencyEstimate estimate_efficiency(const std::vector<double>& samples, const EstimateOptions& options = {});

// Negative log likelihood of binned counts; exposed for tests.
double binned_negative_log_likelihood(const InterferenceModel& model, const std::vector<double>& edges,
                                      const std::vector<double>& counts, std::size_t quadrature);

// ---------------------------------------------------------------------------
// Visibility

struct Visibility {
    double normalized = 0.0;  // (max - min) / total input
    double standard = 0.0;    // (max - min) / (max + min)
};

Visibility visibility(double constructive, double destructive, double total_input);

// From per-pulse stored energies grouped by run: the mean of per-run extremes
// and the global extremes over all pulses.
struct RunVisibility {
    Visibility per_run;
    Visibility global;
};
RunVisibility run_visibility(const std::vector<double>& energies, const std::vector<int>& run_id, double total_input);

// Sum of samples in [t_begin, t_end) times dt, for raw detector traces.
double integrate_window(const std::vector<double>& trace, double t0, double dt, double t_begin, double t_end);

}  // namespace tracemem::stats
