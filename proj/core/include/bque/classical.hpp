#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bque/geometry.hpp"

namespace bque {

/// Unit-speed billiard particle state.
struct PhasePoint {
    Vec2 r;
    double theta = 0;  // direction angle
};

struct Collision {
    Vec2 point;
    double theta_out = 0;
    double time = 0;
    int segment = -1;
};

/// Earliest forward intersection of the ray with the boundary and the
/// specularly reflected direction. Throws if the trajectory escapes.
Collision next_collision(const BilliardDomain& domain, const PhasePoint& state);

/// Indicator signal A(t) = [r(t) in the region] sampled on a uniform grid.
struct SignalSeries {
    double dt = 0;
    double T = 0;
    std::uint64_t seed = 0;
    std::vector<double> samples;  // {0,1} for the indicator observable

    double mean() const;
};

SignalSeries simulate_signal(const BilliardDomain& domain, Vec2 nu, double offset,
                             std::uint64_t seed, double T, double dt);
SignalSeries simulate_signal(const BilliardDomain& domain, const TestRegion& region,
                             std::uint64_t seed, double T, double dt);

/// Smoothed two-sided power spectral density of the signal fluctuation,
/// C_hat(omega) = lim (1/T) |A_tilde(omega)|^2 averaged over realizations,
/// stored one-sided (the spectrum of a real signal is even).
class PowerSpectrum {
  public:
    double domega = 0;       // grid spacing 2 pi / T
    double omega_sm = 0;     // Gaussian smoothing width
    int n_r = 0;             // realizations averaged
    double rel_error = 0;    // (2 pi / (n_r omega_sm T))^(1/2)
    double t_corr = 2.0;     // correlation-time bookkeeping
    double a_bar = 0;        // measured signal mean
    double variance = 0;     // time-domain variance of the signal
    std::vector<double> smoothed;      // one-sided, index j = omega j*domega
    std::vector<double> raw;           // unsmoothed averaged periodogram

    // per-batch smoothed values at checkpoint frequencies, for the
    // batch-means validation of the error model
    std::vector<double> batch_omegas;
    std::vector<std::vector<double>> batch_values;  // [batch][checkpoint]

    double max_omega() const { return domega * (smoothed.size() - 1); }
    /// Linear interpolation of the smoothed curve at |omega|.
    double value_at(double omega) const;
    double error_at(double omega) const { return rel_error * value_at(omega); }
    /// integral C_hat(omega) d omega / 2 pi over the full (two-sided) grid;
    /// equals the signal variance by Parseval.
    double integral_over_2pi() const;
};

/// Estimate from in-memory series (all sharing T and dt, at least two).
PowerSpectrum estimate_power_spectrum(std::span<const SignalSeries> signals, double omega_sm,
                                      int n_batches = 10);

struct ClassicalParams {
    double T = 1e4;
    double dt = 0.02;
    int n_r = 6000;
    double omega_sm = 0.03;
    std::uint64_t seed = 1;
    double t_corr = 2.0;
    int n_batches = 10;
    unsigned workers = 0;
};

/// Streaming estimator: simulates n_r seeded realizations and accumulates
/// their periodograms without materializing the signals. Deterministic for
/// a fixed batch count (each batch is summed sequentially in seed order).
PowerSpectrum estimate_power_spectrum(const BilliardDomain& domain, Vec2 nu, double offset,
                                      const ClassicalParams& params);

struct SpectrumPoint {
    double value = 0;
    double error = 0;
};

/// Smoothed spectrum value with the counting-error bar.
SpectrumPoint spectrum_value(const PowerSpectrum& spectrum, double omega);

}  // namespace bque
